#include "enthm/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace enthm {

using namespace std::chrono;

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour, unsigned minute) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59) {
    throw InvalidArgument("invalid calendar date-time");
  }
  return Timestamp{sys_days{ymd}} + hours{hour} + minutes{minute};
}

std::string format_iso(Timestamp t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()));
  return buf;
}

namespace {

bool read_field(std::string_view text, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Timestamp parse_iso(std::string_view text) {
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0;
  const bool date_ok = text.size() >= 10 && text[4] == '-' && text[7] == '-' &&
                       read_field(text, 0, 4, y) && read_field(text, 5, 2, mo) &&
                       read_field(text, 8, 2, d);
  bool time_ok = text.size() == 10;
  if (date_ok && text.size() >= 16 && (text[10] == 'T' || text[10] == ' ') && text[13] == ':') {
    time_ok = read_field(text, 11, 2, h) && read_field(text, 14, 2, mi);
    // Optional ":SS" is tolerated and truncated to the minute.
    if (text.size() != 16 && !(text.size() == 19 && text[16] == ':')) time_ok = false;
  }
  if (!date_ok || !time_ok) {
    throw InvalidArgument("malformed timestamp '" + std::string(text) + "'");
  }
  return make_timestamp(static_cast<int>(y), mo, d, h, mi);
}

Timestamp shift_back_one_year(Timestamp t) {
  const auto day_start = floor<days>(t);
  const auto time_of_day = t - day_start;
  const year_month_day ymd{day_start};
  year_month_day prior{ymd.year() - years{1}, ymd.month(), ymd.day()};
  if (!prior.ok()) {
    prior = year_month_day{prior.year(), prior.month(), std::chrono::day{28}};
  }
  return Timestamp{sys_days{prior}} + time_of_day;
}

void validate(const Reading& r) {
  if (!std::isfinite(r.intensity) || r.intensity < 0.0) {
    throw InvalidArgument("reading intensity must be finite and non-negative");
  }
}

void CurrentLimits::validate() const {
  if (!(std::isfinite(a) && std::isfinite(i_b) && std::isfinite(b))) {
    throw InvalidArgument("current limits must be finite");
  }
  if (!(b > i_b && i_b > a && a >= 0.0)) {
    throw InvalidArgument("current limits must satisfy b > i_b > a >= 0");
  }
}

}  // namespace enthm

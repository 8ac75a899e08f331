#include "enthm/profiles.hpp"

namespace enthm {

using namespace std::chrono;

ProfileKey ProfileKey::from_index(std::size_t i) {
  if (i >= count) throw InvalidArgument("profile index out of range");
  return {static_cast<Season>(i / 4), static_cast<DayPeriod>((i / 2) % 2),
          static_cast<DayType>(i % 2)};
}

std::string to_string(const ProfileKey& key) {
  static constexpr const char* seasons[] = {"winter", "spring", "summer", "autumn"};
  std::string out = seasons[static_cast<int>(key.season)];
  out += key.period == DayPeriod::day ? "/day" : "/night";
  out += key.daytype == DayType::weekday ? "/weekday" : "/weekend";
  return out;
}

void ProfileBoundaries::validate() const {
  if (day_start < minutes{0} || day_end > minutes{24 * 60} || day_start >= day_end) {
    throw InvalidArgument("day period must satisfy 00:00 <= start < end <= 24:00");
  }
}

ProfileKey classify(Timestamp t, const ProfileBoundaries& boundaries) {
  const auto day_start = floor<days>(t);
  const auto time_of_day = t - day_start;
  const year_month_day ymd{day_start};
  const weekday wd{day_start};

  ProfileKey key;
  key.season = boundaries.season_of_month[static_cast<unsigned>(ymd.month()) - 1];
  key.period = time_of_day >= boundaries.day_start && time_of_day < boundaries.day_end
                   ? DayPeriod::day
                   : DayPeriod::night;
  key.daytype = boundaries.weekend[wd.c_encoding()] ? DayType::weekend : DayType::weekday;
  return key;
}

ProfiledDetector::ProfiledDetector(DetectorConfig config, ProfileBoundaries boundaries)
    : config_(config), boundaries_(boundaries) {
  config_.validate();
  boundaries_.validate();
}

RoutedStep ProfiledDetector::step(const Reading& reading) {
  const ProfileKey key = classify(reading.timestamp, boundaries_);
  auto& slot = buckets_[key.index()];
  if (!slot) slot.emplace(config_);
  return {key, slot->step(reading)};
}

void ProfiledDetector::set_limits(const CurrentLimits& limits) {
  limits.validate();
  config_.limits = limits;
  for (auto& b : buckets_) {
    if (b) b->set_limits(limits);
  }
}

}  // namespace enthm

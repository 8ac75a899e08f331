#include "enthm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

namespace enthm {

namespace {

std::string_view trim_line(std::string_view s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
    s.remove_prefix(3);
  }
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Splits on `sep` into `out`; returns the field count (may exceed out.size()).
template <std::size_t N>
std::size_t split(std::string_view line, char sep, std::array<std::string_view, N>& out) {
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    const auto field = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    if (n < N) out[n] = field;
    ++n;
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return n;
}

// dd/mm/yyyy (day and month may be unpadded) and hh:mm:ss
bool parse_uci_timestamp(std::string_view date, std::string_view time, Timestamp& out) {
  std::array<std::string_view, 3> d{};
  std::array<std::string_view, 3> t{};
  if (split(date, '/', d) != 3 || split(time, ':', t) != 3) return false;
  unsigned day = 0, month = 0, hour = 0, minute = 0, second = 0;
  int year = 0;
  if (!parse_number(d[0], day) || !parse_number(d[1], month) || !parse_number(d[2], year) ||
      !parse_number(t[0], hour) || !parse_number(t[1], minute) || !parse_number(t[2], second)) {
    return false;
  }
  if (second > 59) return false;
  try {
    out = make_timestamp(year, month, day, hour, minute);
  } catch (const InvalidArgument&) {
    return false;
  }
  return true;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// Unbiased integer in [0, bound).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ParseResult parse_uci(std::istream& in, const UciParseOptions& options) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(1, "missing UCI header");
  ++line_no;
  if (trim_line(line) != kUciHeader) throw ParseError(1, "unexpected UCI header");

  std::optional<Timestamp> previous;
  std::array<std::string_view, 9> fields{};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_line(line);
    if (row.empty()) continue;
    ++result.summary.rows_read;

    auto malformed = [&](const std::string& why) {
      if (options.strict) throw ParseError(line_no, why);
      ++result.summary.rows_malformed;
    };

    if (split(row, ';', fields) != 9) {
      malformed("expected 9 semicolon-separated fields");
      continue;
    }
    if (fields[0] == "?" || fields[1] == "?" || fields[5] == "?") {
      ++result.summary.rows_dropped;
      continue;
    }
    Timestamp ts;
    if (!parse_uci_timestamp(fields[0], fields[1], ts)) {
      malformed("malformed date or time");
      continue;
    }
    double intensity = 0.0;
    if (!parse_number(fields[5], intensity) || !std::isfinite(intensity) || intensity < 0.0) {
      malformed("malformed global intensity '" + std::string(fields[5]) + "'");
      continue;
    }
    if (previous && ts <= *previous) {
      throw ParseError(line_no, "non-monotone timestamp " + format_iso(ts));
    }
    previous = ts;
    result.readings.push_back({ts, intensity});
    ++result.summary.rows_emitted;
  }
  return result;
}

void write_canonical(std::ostream& out, const std::vector<Reading>& readings,
                     const std::vector<bool>& labels) {
  if (!labels.empty() && labels.size() != readings.size()) {
    throw InvalidArgument("labels and readings differ in length");
  }
  out << kCanonicalHeader << '\n';
  for (std::size_t i = 0; i < readings.size(); ++i) {
    const bool label = !labels.empty() && labels[i];
    out << format_iso(readings[i].timestamp) << ',' << format_double(readings[i].intensity) << ','
        << (label ? '1' : '0') << '\n';
  }
}

namespace {

std::vector<LabeledReading> read_canonical_body(std::istream& in, std::string_view header,
                                                std::size_t line_no) {
  const bool has_label = header == kCanonicalHeader;
  if (!has_label && header != "timestamp,intensity_amps") {
    throw ParseError(line_no, "unexpected canonical header");
  }
  std::vector<LabeledReading> out;
  std::string line;
  std::array<std::string_view, 3> fields{};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_line(line);
    if (row.empty()) continue;
    const std::size_t n = split(row, ',', fields);
    if (n != (has_label ? 3u : 2u)) throw ParseError(line_no, "wrong field count");
    LabeledReading lr;
    try {
      lr.reading.timestamp = parse_iso(fields[0]);
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, e.what());
    }
    if (!parse_number(fields[1], lr.reading.intensity) || !std::isfinite(lr.reading.intensity) ||
        lr.reading.intensity < 0.0) {
      throw ParseError(line_no, "malformed intensity");
    }
    if (has_label) {
      if (fields[2] == "1" || fields[2] == "true") {
        lr.label = true;
      } else if (fields[2] != "0" && fields[2] != "false") {
        throw ParseError(line_no, "malformed label");
      }
    }
    if (!out.empty() && lr.reading.timestamp <= out.back().reading.timestamp) {
      throw ParseError(line_no, "non-monotone timestamp " + format_iso(lr.reading.timestamp));
    }
    out.push_back(lr);
  }
  return out;
}

}  // namespace

std::vector<LabeledReading> read_canonical(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "missing header");
  return read_canonical_body(in, trim_line(header), 1);
}

std::vector<LabeledReading> read_stream(std::istream& in, ParseSummary* summary) {
  const int first = in.peek();
  if (first == 'D' || first == 0xEF) {
    auto parsed = parse_uci(in);
    if (summary) *summary = parsed.summary;
    std::vector<LabeledReading> out;
    out.reserve(parsed.readings.size());
    for (const Reading& r : parsed.readings) out.push_back({r, false});
    return out;
  }
  auto out = read_canonical(in);
  if (summary) {
    summary->rows_read = summary->rows_emitted = out.size();
  }
  return out;
}

std::array<double, ProfileKey::count> default_amplitudes() {
  std::array<double, ProfileKey::count> out{};
  for (std::size_t i = 0; i < ProfileKey::count; ++i) {
    const ProfileKey key = ProfileKey::from_index(i);
    double mean = 0.0;
    switch (key.season) {
      case Season::winter: mean = 11.5; break;
      case Season::spring: mean = 10.0; break;
      case Season::summer: mean = 9.5; break;
      case Season::autumn: mean = 10.5; break;
    }
    const bool weekend = key.daytype == DayType::weekend;
    if (key.period == DayPeriod::day) {
      mean += weekend ? 1.5 : 0.0;
    } else {
      mean -= weekend ? 2.0 : 2.5;
    }
    out[i] = mean;
  }
  return out;
}

std::vector<Reading> synthesize(const SynthesisSpec& spec) {
  if (spec.period.count() < 1) throw InvalidArgument("period must be positive");
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale)) {
    throw InvalidArgument("noise scale must be finite and non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<Reading> out;
  if (spec.end > spec.start) out.reserve(static_cast<std::size_t>((spec.end - spec.start) / spec.period));
  for (Timestamp t = spec.start; t < spec.end; t += spec.period) {
    const double mean = spec.amplitudes[classify(t, spec.boundaries).index()];
    const double noise = (2.0 * unit_interval(rng) - 1.0) * spec.noise_scale;
    out.push_back({t, std::clamp(mean + noise, 0.0, spec.upper_clamp)});
  }
  return out;
}

std::vector<std::size_t> eligible_positions(const std::vector<Reading>& readings,
                                            std::size_t window_length,
                                            const ProfileBoundaries& boundaries) {
  std::array<std::size_t, ProfileKey::count> seen{};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    auto& n = seen[classify(readings[i].timestamp, boundaries).index()];
    if (n >= window_length + 1) out.push_back(i);
    ++n;
  }
  return out;
}

LabeledStream inject(const std::vector<Reading>& readings, const AttackSpec& spec,
                     const std::vector<std::size_t>& eligible) {
  if (spec.count > readings.size()) {
    throw InvalidArgument("injection count exceeds stream length");
  }
  if (spec.count > eligible.size()) {
    throw InvalidArgument("insufficient eligible positions: need " + std::to_string(spec.count) +
                          ", have " + std::to_string(eligible.size()));
  }
  if (const auto* ext = std::get_if<ExternalValues>(&spec.value_source);
      ext && ext->values.empty() && spec.count > 0) {
    throw InvalidArgument("external value source is empty");
  }

  LabeledStream out;
  out.readings = readings;
  out.labels.assign(readings.size(), false);
  out.manifest.seed = spec.seed;
  out.manifest.eligible_positions = eligible.size();
  out.manifest.source = std::visit(
      [](const auto& src) -> std::string {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, ConstantValue>) {
          return "constant:" + format_double(src.amperes);
        } else if constexpr (std::is_same_v<T, MultiplicativeFactor>) {
          return "factor:" + format_double(src.factor);
        } else {
          return "values:" + std::to_string(src.values.size());
        }
      },
      spec.value_source);

  // Partial Fisher-Yates over the eligible positions.
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> pool = eligible;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t j = i + bounded(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(spec.count);
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end()) {
    throw InvalidArgument("eligible positions must be unique");
  }

  for (std::size_t k = 0; k < pool.size(); ++k) {
    const std::size_t pos = pool[k];
    if (pos >= readings.size()) throw InvalidArgument("eligible position out of range");
    const double original = readings[pos].intensity;
    const double forged = std::visit(
        [&](const auto& src) -> double {
          using T = std::decay_t<decltype(src)>;
          if constexpr (std::is_same_v<T, ConstantValue>) {
            return src.amperes;
          } else if constexpr (std::is_same_v<T, MultiplicativeFactor>) {
            return original * src.factor;
          } else {
            return src.values[k % src.values.size()];
          }
        },
        spec.value_source);
    if (!std::isfinite(forged) || forged < 0.0) {
      throw InvalidArgument("forged value must be finite and non-negative");
    }
    out.readings[pos].intensity = forged;
    out.labels[pos] = true;
    out.manifest.injections.push_back({pos, readings[pos].timestamp, original, forged});
  }
  return out;
}

nlohmann::json to_json(const InjectionManifest& manifest) {
  nlohmann::json injections = nlohmann::json::array();
  for (const Injection& inj : manifest.injections) {
    injections.push_back({{"position", inj.position},
                          {"timestamp", format_iso(inj.timestamp)},
                          {"original", inj.original},
                          {"forged", inj.forged}});
  }
  return {{"seed", manifest.seed},
          {"source", manifest.source},
          {"count", manifest.injections.size()},
          {"eligible_positions", manifest.eligible_positions},
          {"injections", std::move(injections)}};
}

std::vector<double> read_value_file(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = trim_line(line);
    if (s.empty()) continue;
    double v = 0.0;
    if (!parse_number(s, v) || !std::isfinite(v) || v < 0.0) {
      throw ParseError(line_no, "expected a non-negative number");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace enthm

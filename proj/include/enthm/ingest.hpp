#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "enthm/profiles.hpp"

namespace enthm {

inline constexpr const char* kUciHeader =
    "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;"
    "Sub_metering_1;Sub_metering_2;Sub_metering_3";
inline constexpr const char* kCanonicalHeader = "timestamp,intensity_amps,label";

struct ParseSummary {
  std::size_t rows_read = 0;
  std::size_t rows_emitted = 0;
  std::size_t rows_dropped = 0;    // missing marker in date, time or intensity
  std::size_t rows_malformed = 0;  // only non-zero in lenient mode
};

struct ParseResult {
  std::vector<Reading> readings;
  ParseSummary summary;
};

struct UciParseOptions {
  /// Strict parsing throws ParseError on the first malformed row; lenient
  /// parsing counts and skips it.
  bool strict = true;
};

/// Reads the semicolon-separated household power consumption format. The
/// header row is required. Out-of-order timestamps always throw.
ParseResult parse_uci(std::istream& in, const UciParseOptions& options = {});

struct LabeledReading {
  Reading reading;
  bool label = false;  // true = forged
};

/// Canonical "timestamp,intensity_amps,label" CSV.
void write_canonical(std::ostream& out, const std::vector<Reading>& readings,
                     const std::vector<bool>& labels);
std::vector<LabeledReading> read_canonical(std::istream& in);

/// Reads either format, picking by the header line.
std::vector<LabeledReading> read_stream(std::istream& in, ParseSummary* summary = nullptr);

struct SynthesisSpec {
  /// Mean amperes per ProfileKey::index().
  std::array<double, ProfileKey::count> amplitudes{};
  double noise_scale = 1.5;  // uniform in [-noise, +noise]
  Timestamp start{};
  Timestamp end{};  // exclusive
  std::chrono::minutes period{1};
  std::uint64_t seed = 0;
  double upper_clamp = 30.0;
  ProfileBoundaries boundaries{};
};

/// Household-like bucket means: higher by day, on weekends and in winter,
/// every bucket comfortably above a 5 A basic current.
std::array<double, ProfileKey::count> default_amplitudes();

std::vector<Reading> synthesize(const SynthesisSpec& spec);

struct ConstantValue {
  double amperes = 25.0;
};
struct MultiplicativeFactor {
  double factor = 1.0;
};
struct ExternalValues {
  std::vector<double> values;  // used cyclically
};
using ValueSource = std::variant<ConstantValue, MultiplicativeFactor, ExternalValues>;

struct AttackSpec {
  std::size_t count = 0;
  ValueSource value_source = ConstantValue{};
  std::uint64_t seed = 0;
};

struct Injection {
  std::size_t position = 0;
  Timestamp timestamp{};
  double original = 0.0;
  double forged = 0.0;
};

struct InjectionManifest {
  std::uint64_t seed = 0;
  std::string source;
  std::size_t eligible_positions = 0;
  std::vector<Injection> injections;  // sorted by position, unique
};

struct LabeledStream {
  std::vector<Reading> readings;
  std::vector<bool> labels;
  InjectionManifest manifest;
};

/// Positions whose profile bucket already holds T+1 earlier samples, i.e.
/// positions a ProfiledDetector will produce a verdict for.
std::vector<std::size_t> eligible_positions(const std::vector<Reading>& readings,
                                            std::size_t window_length,
                                            const ProfileBoundaries& boundaries);

LabeledStream inject(const std::vector<Reading>& readings, const AttackSpec& spec,
                     const std::vector<std::size_t>& eligible);

nlohmann::json to_json(const InjectionManifest& manifest);

/// Reads one number per non-empty line.
std::vector<double> read_value_file(std::istream& in);

}  // namespace enthm

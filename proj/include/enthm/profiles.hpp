#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>

#include "enthm/detector.hpp"

namespace enthm {

enum class Season { winter, spring, summer, autumn };
enum class DayPeriod { day, night };
enum class DayType { weekday, weekend };

/// Season x day/night x weekday/weekend bucket. 16 keys in total.
struct ProfileKey {
  Season season = Season::winter;
  DayPeriod period = DayPeriod::day;
  DayType daytype = DayType::weekday;

  static constexpr std::size_t count = 16;

  constexpr std::size_t index() const noexcept {
    return static_cast<std::size_t>(season) * 4 + static_cast<std::size_t>(period) * 2 +
           static_cast<std::size_t>(daytype);
  }
  static ProfileKey from_index(std::size_t i);

  friend constexpr auto operator<=>(const ProfileKey&, const ProfileKey&) = default;
};

/// e.g. "autumn/day/weekend"
std::string to_string(const ProfileKey& key);

struct ProfileBoundaries {
  /// Index 0 = January.
  std::array<Season, 12> season_of_month{Season::winter, Season::winter, Season::spring,
                                         Season::spring, Season::spring, Season::summer,
                                         Season::summer, Season::summer, Season::autumn,
                                         Season::autumn, Season::autumn, Season::winter};
  /// Day period is [day_start, day_end) in local time.
  std::chrono::minutes day_start{6 * 60};
  std::chrono::minutes day_end{18 * 60};
  /// Indexed by weekday c_encoding (0 = Sunday).
  std::array<bool, 7> weekend{true, false, false, false, false, false, true};

  void validate() const;
};

ProfileKey classify(Timestamp t, const ProfileBoundaries& boundaries = {});

struct RoutedStep {
  ProfileKey key;
  std::optional<Verdict> verdict;
};

/// One independent DetectorState per profile bucket, created on first use.
class ProfiledDetector {
 public:
  explicit ProfiledDetector(DetectorConfig config, ProfileBoundaries boundaries = {});

  RoutedStep step(const Reading& reading);

  /// Applies new limits to every existing and future bucket.
  void set_limits(const CurrentLimits& limits);

  const DetectorConfig& config() const noexcept { return config_; }
  const ProfileBoundaries& boundaries() const noexcept { return boundaries_; }

  /// nullptr until the bucket has received a reading.
  const DetectorState* bucket(const ProfileKey& key) const noexcept {
    const auto& b = buckets_[key.index()];
    return b ? &*b : nullptr;
  }

 private:
  DetectorConfig config_;
  ProfileBoundaries boundaries_;
  std::array<std::optional<DetectorState>, ProfileKey::count> buckets_;
};

}  // namespace enthm

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "enthm/types.hpp"

namespace enthm {

/// Current window and its one-year-prior twin. Each holds T+1 samples once
/// complete; `window_length` is T.
struct WindowPair {
  std::vector<Reading> current;
  std::vector<Reading> prior_year;
  std::size_t window_length = 0;

  bool complete() const noexcept {
    return current.size() == window_length + 1 && prior_year.size() == window_length + 1;
  }
};

/// Indicator-filtered averages over both windows, after out-of-range repair.
struct CumulativeAverages {
  double r1_bar = 0.0;  // below-or-at basic current
  double r2_bar = 0.0;  // above basic current
  bool r1_fallback_used = false;
  bool r2_fallback_used = false;

  friend bool operator==(const CumulativeAverages&, const CumulativeAverages&) = default;
};

/// Rate-of-change parameter, stored as an integer count of tenths in [0, 10].
class RateOfChange {
 public:
  constexpr RateOfChange() = default;
  explicit RateOfChange(int tenths);

  constexpr int tenths() const noexcept { return tenths_; }
  constexpr double value() const noexcept { return tenths_ / 10.0; }

  friend constexpr bool operator==(RateOfChange, RateOfChange) = default;
  friend constexpr auto operator<=>(RateOfChange, RateOfChange) = default;

 private:
  int tenths_ = 0;
};

/// n = 10 * alpha + beta for one sample's percentage headroom to I_MAX.
struct DigitDecomposition {
  int n = 0;
  int alpha = 0;
  int beta = 0;
};

DigitDecomposition decompose(double intensity, double i_max);

enum class ThresholdBranch {
  initial,  // first window of the stream
  widened,  // scaled away from the basic current
  narrowed, // scaled toward the basic current
  held,     // scaling would leave the admissible band; average kept
};

const char* to_string(ThresholdBranch b) noexcept;

struct Thresholds {
  double r1 = 0.0;
  double r2 = 0.0;
  Timestamp computed_from_window_start{};
  bool is_initial = false;
  ThresholdBranch lower_branch = ThresholdBranch::initial;
  ThresholdBranch upper_branch = ThresholdBranch::initial;
  CumulativeAverages source{};
  RateOfChange alpha{};

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct Verdict {
  Timestamp query_timestamp{};
  double intensity = 0.0;
  double ratio = 0.0;
  bool valid = false;
  Thresholds thresholds_used{};

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Applies the range repair to raw indicator sums. `count` is the number of
/// samples across both windows (2T+2).
CumulativeAverages finalize_averages(double sum_above, double sum_below, std::size_t count,
                                     const CurrentLimits& limits,
                                     const std::optional<CumulativeAverages>& previous);

CumulativeAverages cumulative_averages(const WindowPair& windows, const CurrentLimits& limits,
                                       const std::optional<CumulativeAverages>& previous = {});

/// Mode of a histogram of alpha digits (index = digit); ties go to the
/// largest digit.
RateOfChange mode_of(const std::array<std::size_t, 11>& histogram);

RateOfChange rate_of_change(const WindowPair& windows, const CurrentLimits& limits);

Thresholds thresholds(const CumulativeAverages& averages, RateOfChange alpha,
                      const CurrentLimits& limits, bool is_initial);

Verdict verify(const Reading& query, const Thresholds& thresholds);

struct DetectorConfig {
  CurrentLimits limits{};
  std::size_t window_length = 110;  // T; windows hold T+1 samples
  std::chrono::minutes sampling_period{1};

  void validate() const;
};

/// Streaming state for one meter (or one profile bucket of a meter).
///
/// Every reading is first judged against the thresholds derived from the
/// current complete window pair, then admitted, sliding the window by one
/// sample. No verdict is produced until both windows hold T+1 samples.
class DetectorState {
 public:
  explicit DetectorState(DetectorConfig config);

  std::optional<Verdict> step(const Reading& reading);

  /// Replaces the limits and re-derives averages and thresholds for the
  /// current window.
  void set_limits(const CurrentLimits& limits);

  const DetectorConfig& config() const noexcept { return config_; }
  bool warmed_up() const noexcept { return slots_.size() == config_.window_length + 1; }
  std::size_t admitted() const noexcept { return admitted_; }

  /// Window pair as the detector sees it, with prior-year holes resolved.
  WindowPair windows() const;

  const std::optional<CumulativeAverages>& averages() const noexcept { return averages_; }
  RateOfChange alpha() const noexcept { return alpha_; }
  const std::optional<Thresholds>& current_thresholds() const noexcept { return thresholds_; }

  /// Slots in the current window whose prior-year sample was found.
  std::size_t matched_prior_slots() const noexcept { return prior_.matched; }
  /// Admitted samples, over the lifetime, that found a prior-year sample.
  std::size_t prior_year_matches() const noexcept { return prior_year_matches_; }

 private:
  struct Slot {
    Reading current;
    std::optional<double> prior;
    int current_digit = 0;
    int prior_digit = 0;
  };

  struct Accumulator {
    double sum_above = 0.0;
    double sum_below = 0.0;
    std::size_t count_above = 0;
    std::size_t count_below = 0;
    std::array<std::size_t, 11> histogram{};
    std::size_t matched = 0;

    void add(double intensity, int digit, double i_b);
    void remove(double intensity, int digit, double i_b);
  };

  std::optional<double> find_prior(Timestamp t) const;
  void rebuild_accumulators();
  void refresh();
  std::pair<double, double> exact_sums() const;
  std::vector<double> resolved_prior() const;

  DetectorConfig config_;
  std::deque<Slot> slots_;
  std::deque<Reading> history_;
  Accumulator current_;
  Accumulator prior_;
  std::optional<Timestamp> first_timestamp_;
  std::optional<Timestamp> last_timestamp_;
  std::optional<CumulativeAverages> averages_;
  RateOfChange alpha_{};
  std::optional<Thresholds> thresholds_;
  std::size_t admitted_ = 0;
  std::size_t prior_year_matches_ = 0;
  std::size_t slides_since_resync_ = 0;
};

}  // namespace enthm

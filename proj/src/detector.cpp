#include "enthm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace enthm {

namespace {

// Bounds floating-point drift in the sliding sums.
constexpr std::size_t kResyncInterval = 4096;

bool in_open_closed(double x, double lo, double hi) { return x > lo && x <= hi; }

}  // namespace

RateOfChange::RateOfChange(int tenths) : tenths_(tenths) {
  if (tenths < 0 || tenths > 10) {
    throw InvalidArgument("rate of change must be a multiple of 0.1 in [0, 1]");
  }
}

DigitDecomposition decompose(double intensity, double i_max) {
  double percent = (i_max - intensity) / i_max * 100.0;
  // Readings are decimal; snap binary noise such as 67.99999999999999 back to
  // the integer the decimal arithmetic would give.
  const double nearest = std::round(percent);
  if (std::abs(percent - nearest) < 1e-9) percent = nearest;
  int n = static_cast<int>(std::ceil(percent));
  n = std::clamp(n, 0, 100);  // over-limit readings give negative headroom
  return {n, n / 10, n % 10};
}

const char* to_string(ThresholdBranch b) noexcept {
  switch (b) {
    case ThresholdBranch::initial: return "initial";
    case ThresholdBranch::widened: return "widened";
    case ThresholdBranch::narrowed: return "narrowed";
    case ThresholdBranch::held: return "held";
  }
  return "?";
}

CumulativeAverages finalize_averages(double sum_above, double sum_below, std::size_t count,
                                     const CurrentLimits& limits,
                                     const std::optional<CumulativeAverages>& previous) {
  const double denom = static_cast<double>(count);
  CumulativeAverages out;
  out.r2_bar = sum_above / denom;
  out.r1_bar = sum_below / denom;

  const bool r2_ok = out.r2_bar > limits.i_b && out.r2_bar < limits.b;
  if (!r2_ok) {
    out.r2_fallback_used = true;
    const bool prev_ok = previous && previous->r2_bar > limits.i_b && previous->r2_bar < limits.b;
    out.r2_bar = prev_ok ? previous->r2_bar : (limits.i_b + limits.b) / 2.0;
  }
  if (!in_open_closed(out.r1_bar, limits.a, limits.i_b)) {
    out.r1_fallback_used = true;
    const bool prev_ok = previous && in_open_closed(previous->r1_bar, limits.a, limits.i_b);
    out.r1_bar = prev_ok ? previous->r1_bar : (limits.a + limits.i_b) / 2.0;
  }
  return out;
}

CumulativeAverages cumulative_averages(const WindowPair& windows, const CurrentLimits& limits,
                                       const std::optional<CumulativeAverages>& previous) {
  if (!windows.complete()) throw WindowIncompleteError("window pair is not complete");
  limits.validate();
  double above = 0.0;
  double below = 0.0;
  for (const auto* w : {&windows.current, &windows.prior_year}) {
    for (const Reading& r : *w) {
      (r.intensity > limits.i_b ? above : below) += r.intensity;
    }
  }
  return finalize_averages(above, below, windows.current.size() + windows.prior_year.size(),
                           limits, previous);
}

RateOfChange mode_of(const std::array<std::size_t, 11>& histogram) {
  int best = 0;
  for (int d = 1; d <= 10; ++d) {
    if (histogram[d] >= histogram[best]) best = d;
  }
  return RateOfChange{best};
}

RateOfChange rate_of_change(const WindowPair& windows, const CurrentLimits& limits) {
  if (!windows.complete()) throw WindowIncompleteError("window pair is not complete");
  std::array<std::size_t, 11> histogram{};
  for (const auto* w : {&windows.current, &windows.prior_year}) {
    for (const Reading& r : *w) ++histogram[decompose(r.intensity, limits.b).alpha];
  }
  return mode_of(histogram);
}

Thresholds thresholds(const CumulativeAverages& averages, RateOfChange alpha,
                      const CurrentLimits& limits, bool is_initial) {
  Thresholds out;
  out.source = averages;
  out.alpha = alpha;
  out.is_initial = is_initial;
  if (is_initial) {
    out.r1 = limits.a;
    out.r2 = limits.b;
    return out;
  }

  const double k = alpha.value();
  const double up_avg = averages.r2_bar;
  const double low_avg = averages.r1_bar;

  // Upper: scale away from I_b when there is more headroom to b than margin
  // above I_b, otherwise toward it; hold if the result leaves (I_b, b].
  out.r2 = up_avg;
  out.upper_branch = ThresholdBranch::held;
  if (limits.b - up_avg >= up_avg - limits.i_b) {
    if ((1.0 + k) * up_avg <= limits.b) {
      out.r2 = (1.0 + k) * up_avg;
      out.upper_branch = ThresholdBranch::widened;
    }
  } else if ((1.0 - k) * up_avg > limits.i_b) {
    out.r2 = (1.0 - k) * up_avg;
    out.upper_branch = ThresholdBranch::narrowed;
  }

  // Lower: mirror image inside (a, I_b].
  out.r1 = low_avg;
  out.lower_branch = ThresholdBranch::held;
  if (low_avg - limits.a >= limits.i_b - low_avg) {
    if ((1.0 - k) * low_avg > limits.a) {
      out.r1 = (1.0 - k) * low_avg;
      out.lower_branch = ThresholdBranch::widened;
    }
  } else if ((1.0 + k) * low_avg <= limits.i_b) {
    out.r1 = (1.0 + k) * low_avg;
    out.lower_branch = ThresholdBranch::narrowed;
  }
  return out;
}

Verdict verify(const Reading& query, const Thresholds& th) {
  Verdict v;
  v.query_timestamp = query.timestamp;
  v.intensity = query.intensity;
  v.ratio = (query.intensity - th.r1) / (th.r2 - th.r1);
  v.valid = v.ratio >= 0.0 && v.ratio <= 1.0;
  v.thresholds_used = th;
  return v;
}

void DetectorConfig::validate() const {
  limits.validate();
  if (window_length < 1) throw InvalidArgument("window length T must be at least 1");
  if (sampling_period.count() < 1) throw InvalidArgument("sampling period must be positive");
}

// ---------------------------------------------------------------------------

void DetectorState::Accumulator::add(double intensity, int digit, double i_b) {
  if (intensity > i_b) {
    sum_above += intensity;
    ++count_above;
  } else {
    sum_below += intensity;
    ++count_below;
  }
  ++histogram[digit];
  ++matched;
}

void DetectorState::Accumulator::remove(double intensity, int digit, double i_b) {
  // An emptied side is exactly zero, not the rounding residue of add/remove.
  if (intensity > i_b) {
    sum_above = --count_above == 0 ? 0.0 : sum_above - intensity;
  } else {
    sum_below = --count_below == 0 ? 0.0 : sum_below - intensity;
  }
  --histogram[digit];
  --matched;
}

DetectorState::DetectorState(DetectorConfig config) : config_(config) { config_.validate(); }

std::optional<double> DetectorState::find_prior(Timestamp t) const {
  const Timestamp target = shift_back_one_year(t);
  auto it = std::lower_bound(history_.begin(), history_.end(), target,
                             [](const Reading& r, Timestamp x) { return r.timestamp < x; });
  std::optional<double> best;
  auto best_gap = config_.sampling_period;
  auto consider = [&](const Reading& r) {
    const auto gap = r.timestamp > target ? r.timestamp - target : target - r.timestamp;
    if (gap < best_gap) {
      best_gap = gap;
      best = r.intensity;
    }
  };
  if (it != history_.begin()) consider(*std::prev(it));
  if (it != history_.end()) consider(*it);
  return best;
}

std::optional<Verdict> DetectorState::step(const Reading& reading) {
  validate(reading);
  if (last_timestamp_ && reading.timestamp <= *last_timestamp_) {
    throw OutOfOrderError("reading at " + format_iso(reading.timestamp) +
                          " is not after " + format_iso(*last_timestamp_));
  }

  std::optional<Verdict> verdict;
  if (warmed_up() && thresholds_) verdict = verify(reading, *thresholds_);

  const double i_b = config_.limits.i_b;
  Slot slot{reading, find_prior(reading.timestamp),
            decompose(reading.intensity, config_.limits.b).alpha, 0};
  if (slot.prior) {
    slot.prior_digit = decompose(*slot.prior, config_.limits.b).alpha;
    ++prior_year_matches_;
    prior_.add(*slot.prior, slot.prior_digit, i_b);
  }
  current_.add(reading.intensity, slot.current_digit, i_b);
  slots_.push_back(slot);

  history_.push_back(reading);
  // One extra day: 29 Feb looks up 28 Feb again, after 28 Feb has moved on.
  const Timestamp horizon =
      shift_back_one_year(reading.timestamp) - std::chrono::days{1} - config_.sampling_period;
  while (!history_.empty() && history_.front().timestamp < horizon) history_.pop_front();

  if (!first_timestamp_) first_timestamp_ = reading.timestamp;
  last_timestamp_ = reading.timestamp;
  ++admitted_;

  if (slots_.size() > config_.window_length + 1) {
    const Slot& out = slots_.front();
    current_.remove(out.current.intensity, out.current_digit, i_b);
    if (out.prior) prior_.remove(*out.prior, out.prior_digit, i_b);
    slots_.pop_front();
    if (++slides_since_resync_ >= kResyncInterval) rebuild_accumulators();
  }

  if (warmed_up()) refresh();
  return verdict;
}

void DetectorState::set_limits(const CurrentLimits& limits) {
  limits.validate();
  config_.limits = limits;
  rebuild_accumulators();
  if (warmed_up()) refresh();
}

void DetectorState::rebuild_accumulators() {
  current_ = {};
  prior_ = {};
  const double i_b = config_.limits.i_b;
  for (Slot& s : slots_) {
    s.current_digit = decompose(s.current.intensity, config_.limits.b).alpha;
    current_.add(s.current.intensity, s.current_digit, i_b);
    if (s.prior) {
      s.prior_digit = decompose(*s.prior, config_.limits.b).alpha;
      prior_.add(*s.prior, s.prior_digit, i_b);
    }
  }
  slides_since_resync_ = 0;
}

std::vector<double> DetectorState::resolved_prior() const {
  std::vector<double> out(slots_.size());
  if (prior_.matched == 0) {
    for (std::size_t i = 0; i < slots_.size(); ++i) out[i] = slots_[i].current.intensity;
    return out;
  }
  // Hole -> nearest matched slot by index; ties go to the earlier slot.
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> left(slots_.size(), none);
  std::size_t last = none;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].prior) last = i;
    left[i] = last;
  }
  std::size_t next = none;
  for (std::size_t i = slots_.size(); i-- > 0;) {
    if (slots_[i].prior) next = i;
    std::size_t pick = left[i];
    if (pick == none || (next != none && next - i < i - pick)) pick = next;
    out[i] = *slots_[pick].prior;
  }
  return out;
}

void DetectorState::refresh() {
  const double i_b = config_.limits.i_b;
  const std::size_t n = slots_.size();
  double above = current_.sum_above;
  double below = current_.sum_below;
  auto histogram = current_.histogram;

  if (prior_.matched == n) {
    above += prior_.sum_above;
    below += prior_.sum_below;
    for (std::size_t d = 0; d < histogram.size(); ++d) histogram[d] += prior_.histogram[d];
  } else if (prior_.matched == 0) {
    // Cold start: the prior window is a copy of the current one.
    above *= 2.0;
    below *= 2.0;
    for (auto& c : histogram) c *= 2;
  } else {
    for (double x : resolved_prior()) {
      (x > i_b ? above : below) += x;
      ++histogram[decompose(x, config_.limits.b).alpha];
    }
  }

  // Near a limit the accept/fallback decision depends on the last bits of the
  // sums; recompute them in window order so the outcome is reproducible.
  const CurrentLimits& l = config_.limits;
  const double denom = static_cast<double>(2 * n);
  auto near = [](double x, double bound) {
    return std::abs(x - bound) <= 1e-9 * std::max(1.0, std::abs(bound));
  };
  const double r2_raw = above / denom;
  const double r1_raw = below / denom;
  if (near(r2_raw, l.i_b) || near(r2_raw, l.b) || near(r1_raw, l.a) || near(r1_raw, l.i_b)) {
    std::tie(above, below) = exact_sums();
  }

  averages_ = finalize_averages(above, below, 2 * n, config_.limits, averages_);
  alpha_ = mode_of(histogram);
  const Timestamp start = slots_.front().current.timestamp;
  thresholds_ = thresholds(*averages_, alpha_, config_.limits, start == *first_timestamp_);
  thresholds_->computed_from_window_start = start;
}

std::pair<double, double> DetectorState::exact_sums() const {
  const double i_b = config_.limits.i_b;
  double above = 0.0;
  double below = 0.0;
  auto add = [&](double x) { (x > i_b ? above : below) += x; };
  for (const Slot& s : slots_) add(s.current.intensity);
  for (double x : resolved_prior()) add(x);
  return {above, below};
}

WindowPair DetectorState::windows() const {
  WindowPair w;
  w.window_length = config_.window_length;
  const auto prior = resolved_prior();
  w.current.reserve(slots_.size());
  w.prior_year.reserve(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    w.current.push_back(slots_[i].current);
    w.prior_year.push_back({shift_back_one_year(slots_[i].current.timestamp), prior[i]});
  }
  return w;
}

}  // namespace enthm

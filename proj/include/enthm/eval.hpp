#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "json.hpp"

#include "enthm/detector.hpp"

namespace enthm {

struct ConfusionMatrix {
  std::size_t tp = 0;  // invalid verdict at a forged position
  std::size_t tn = 0;  // valid verdict at an honest position
  std::size_t fp = 0;  // invalid verdict at an honest position
  std::size_t fn = 0;  // valid verdict at a forged position

  // Warm-up positions carry no verdict and are not scored.
  std::size_t excluded_honest = 0;
  std::size_t excluded_forged = 0;

  std::size_t scored() const noexcept { return tp + tn + fp + fn; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// FPR with warm-up honest positions added to the denominator.
  double fpr_all_honest = 0.0;

  // A metric whose denominator is zero is reported as 0 with its flag set.
  bool tpr_degenerate = false;
  bool fpr_degenerate = false;
  bool precision_degenerate = false;
  bool f1_degenerate = false;

  ConfusionMatrix matrix;
};

/// Positional pairing: verdicts[i] judges the reading whose label is
/// labels[i]; std::nullopt marks a warm-up position.
ConfusionMatrix score(const std::vector<std::optional<Verdict>>& verdicts,
                      const std::vector<bool>& labels);

MetricsReport metrics(const ConfusionMatrix& matrix);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace enthm

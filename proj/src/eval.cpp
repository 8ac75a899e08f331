#include "enthm/eval.hpp"

#include <string>

namespace enthm {

ConfusionMatrix score(const std::vector<std::optional<Verdict>>& verdicts,
                      const std::vector<bool>& labels) {
  if (verdicts.size() != labels.size()) {
    throw AlignmentError("verdict stream has " + std::to_string(verdicts.size()) +
                         " positions but " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool forged = labels[i];
    if (!verdicts[i]) {
      ++(forged ? m.excluded_forged : m.excluded_honest);
      continue;
    }
    const bool flagged = !verdicts[i]->valid;
    if (forged) {
      ++(flagged ? m.tp : m.fn);
    } else {
      ++(flagged ? m.fp : m.tn);
    }
  }
  return m;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
  degenerate = den == 0;
  return degenerate ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport metrics(const ConfusionMatrix& m) {
  if (m.scored() == 0) throw InvalidArgument("confusion matrix is empty");
  MetricsReport r;
  r.matrix = m;
  bool unused = false;
  r.accuracy = ratio(m.tp + m.tn, m.scored(), unused);
  r.tpr = ratio(m.tp, m.tp + m.fn, r.tpr_degenerate);
  r.recall = r.tpr;
  r.fpr = ratio(m.fp, m.fp + m.tn, r.fpr_degenerate);
  r.fpr_all_honest = ratio(m.fp, m.fp + m.tn + m.excluded_honest, unused);
  r.precision = ratio(m.tp, m.tp + m.fp, r.precision_degenerate);
  const double sum = r.precision + r.recall;
  r.f1_degenerate = sum == 0.0;
  r.f1 = r.f1_degenerate ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  const ConfusionMatrix& m = r.matrix;
  return {{"accuracy", r.accuracy},
          {"tpr", r.tpr},
          {"fpr", r.fpr},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"fpr_all_honest", r.fpr_all_honest},
          {"degenerate",
           {{"tpr", r.tpr_degenerate},
            {"fpr", r.fpr_degenerate},
            {"precision", r.precision_degenerate},
            {"f1", r.f1_degenerate}}},
          {"counts",
           {{"tp", m.tp},
            {"tn", m.tn},
            {"fp", m.fp},
            {"fn", m.fn},
            {"scored", m.scored()},
            {"excluded_honest", m.excluded_honest},
            {"excluded_forged", m.excluded_forged},
            {"total", m.scored() + m.excluded_honest + m.excluded_forged}}}};
}

}  // namespace enthm

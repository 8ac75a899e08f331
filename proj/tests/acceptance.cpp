// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
// below. Set ENTHM_UCI_PATH to the household power consumption text file to
// run the dataset-backed checks; without it criterion 3 is skipped and
// criterion 4 runs on a seeded synthetic stream of the same length.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "enthm/eval.hpp"
#include "enthm/hierarchy.hpp"
#include "enthm/ingest.hpp"
#include "invariants.hpp"

using namespace enthm;
using namespace std::chrono_literals;

namespace {

constexpr double kRatioTolerance = 1e-3;       // criterion 2
constexpr double kWindowTolerance = 0.05;      // criterion 3, amperes
constexpr double kMinAccuracy = 0.99;          // criterion 4
constexpr double kMinTpr = 0.99;
constexpr double kMaxFpr = 0.01;
constexpr double kMinF1 = 0.99;
constexpr double kTimeBudgetSeconds = 300.0;
constexpr std::size_t kUciRows = 2075259;
constexpr double kOracleTolerance = 1e-9;      // criterion 5
constexpr std::size_t kMinOracleSteps = 10000;
constexpr std::size_t kMinCaseTuples = 10000;
constexpr double kConservationTolerance = 1e-9;  // criterion 7

constexpr int kSkipped = 77;

enum class Outcome { pass, fail, skip };

struct Result {
  Outcome outcome = Outcome::fail;
  std::string detail;
};

Result pass(std::string d) { return {Outcome::pass, std::move(d)}; }
Result fail(std::string d) { return {Outcome::fail, std::move(d)}; }
Result check(bool ok, std::string d) { return {ok ? Outcome::pass : Outcome::fail, std::move(d)}; }

std::string num(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << x;
  return os.str();
}

std::optional<std::string> uci_path() {
  const char* p = std::getenv("ENTHM_UCI_PATH");
  if (!p || !*p) return std::nullopt;
  return std::string(p);
}

std::vector<Reading> load_uci(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse_uci(in).readings;
}

// ---------------------------------------------------------------------------

Result worked_alpha_example() {
  const std::vector<double> cur{9.600, 9.600, 10.500, 8.600, 7.400};
  const std::vector<double> pri{11.500, 10.500, 9.600, 9.300, 8.500};
  const std::vector<int> want_n{68, 68, 65, 72, 76, 62, 65, 68, 69, 72};
  WindowPair w;
  w.window_length = 4;
  Timestamp t = make_timestamp(2010, 11, 21, 10, 0);
  std::vector<int> got_n;
  for (std::size_t i = 0; i < cur.size(); ++i, t += 1min) {
    w.current.push_back({t, cur[i]});
    w.prior_year.push_back({shift_back_one_year(t), pri[i]});
  }
  for (double x : cur) got_n.push_back(decompose(x, 30.0).n);
  for (double x : pri) got_n.push_back(decompose(x, 30.0).n);
  const RateOfChange alpha = rate_of_change(w, CurrentLimits{});
  return check(got_n == want_n && alpha.tenths() == 6,
               "alpha = " + num(alpha.value(), 1) + ", n_j " + (got_n == want_n ? "match" : "differ"));
}

Result table_one_verification() {
  Thresholds th;
  th.r1 = 2.100;
  th.r2 = 15.500;
  const Verdict v = verify({make_timestamp(2010, 11, 21, 11, 55), 25.0}, th);
  return check(std::abs(v.ratio - 1.709) <= kRatioTolerance && !v.valid,
               "ratio = " + num(v.ratio) + ", " + (v.valid ? "valid" : "invalid"));
}

Result uci_window_scenario() {
  const auto path = uci_path();
  if (!path) return {Outcome::skip, "ENTHM_UCI_PATH not set; dataset unavailable"};
  const auto all = load_uci(*path);
  DetectorConfig cfg;  // T = 110 at one minute
  DetectorState d(cfg);
  auto feed = [&](Timestamp from, Timestamp to) {
    std::size_t n = 0;
    for (const Reading& r : all) {
      if (r.timestamp >= from && r.timestamp <= to) {
        d.step(r);
        ++n;
      }
    }
    return n;
  };
  const std::size_t prior = feed(make_timestamp(2009, 11, 21, 10, 0), make_timestamp(2009, 11, 21, 11, 50));
  const std::size_t current = feed(make_timestamp(2010, 11, 21, 10, 0), make_timestamp(2010, 11, 21, 11, 50));
  if (!d.warmed_up()) {
    return fail("window not full: " + std::to_string(prior) + " prior, " + std::to_string(current) + " current");
  }
  const auto v = d.step({make_timestamp(2010, 11, 21, 11, 55), 25.0});
  const Thresholds& th = v->thresholds_used;
  const bool ok = std::abs(th.source.r1_bar - 2.800) <= kWindowTolerance &&
                  std::abs(th.source.r2_bar - 12.400) <= kWindowTolerance &&
                  std::abs(th.r1 - 2.100) <= kWindowTolerance &&
                  std::abs(th.r2 - 15.500) <= kWindowTolerance && !v->valid;
  return check(ok, "R1 = " + num(th.source.r1_bar, 3) + ", R2 = " + num(th.source.r2_bar, 3) +
                       ", r1 = " + num(th.r1, 3) + ", r2 = " + num(th.r2, 3) +
                       ", alpha = " + num(th.alpha.value(), 1) + ", " + (v->valid ? "valid" : "invalid"));
}

Result end_to_end_metrics() {
  const auto started = std::chrono::steady_clock::now();
  std::vector<Reading> readings;
  std::string source;
  if (const auto path = uci_path()) {
    readings = load_uci(*path);
    source = "UCI";
  } else {
    SynthesisSpec spec;
    spec.amplitudes = default_amplitudes();
    spec.start = make_timestamp(2007, 1, 1);
    spec.end = spec.start + std::chrono::minutes(kUciRows);
    spec.period = 1min;
    spec.seed = 2075259;
    readings = synthesize(spec);
    source = "synthetic";
  }
  DetectorConfig cfg;
  const auto eligible = eligible_positions(readings, cfg.window_length, {});
  const auto labeled = inject(readings, {500, ConstantValue{25.0}, 20101121}, eligible);

  ProfiledDetector detector(cfg);
  std::vector<std::optional<Verdict>> verdicts;
  verdicts.reserve(labeled.readings.size());
  for (const Reading& r : labeled.readings) verdicts.push_back(detector.step(r).verdict);
  const auto report = metrics(score(verdicts, labeled.labels));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const bool ok = report.accuracy >= kMinAccuracy && report.tpr >= kMinTpr && report.fpr <= kMaxFpr &&
                  report.f1 >= kMinF1 && seconds < kTimeBudgetSeconds;
  return check(ok, source + ", " + std::to_string(readings.size()) + " rows: accuracy " +
                       num(report.accuracy) + ", TPR " + num(report.tpr) + ", FPR " + num(report.fpr) +
                       " (all honest " + num(report.fpr_all_honest, 6) + "), F1 " + num(report.f1) +
                       ", " + num(seconds, 1) + " s");
}

testing::CheckStats checked_run(const std::vector<Reading>& stream, std::size_t T,
                                std::chrono::minutes period, std::uint64_t seed) {
  DetectorConfig cfg;
  cfg.window_length = T;
  cfg.sampling_period = period;
  testing::CheckedDetector d(cfg, seed);
  for (const Reading& r : stream) d.step(r);
  return d.stats();
}

Result oracle_equivalence() {
  testing::CheckStats stats;
  stats.merge(checked_run(testing::random_stream({make_timestamp(2008, 5, 1), 1min, 6000, 0.0, 32.0, 0.0, 101}),
                          9, 1min, 1));
  stats.merge(checked_run(testing::random_stream({make_timestamp(2007, 1, 1), 60min, 12000, 0.5, 20.0, 0.1, 102}),
                          7, 60min, 2));

  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < kMinCaseTuples; ++i) {
    const double a = i % 3 == 0 ? 0.0 : 2.0 * u(rng);
    const double ib = a + 0.5 + 10.0 * u(rng);
    const double b = ib + 0.5 + 40.0 * u(rng);
    const CurrentLimits l{a, ib, b};
    double R2 = ib + (b - ib) * (i % 11 == 0 ? 0.5 : u(rng));
    double R1 = a + (ib - a) * (i % 13 == 0 ? 0.5 : (i % 17 == 0 ? 1.0 : u(rng)));
    if (R2 <= ib || R2 >= b) R2 = (ib + b) / 2;
    if (R1 <= a) R1 = (a + ib) / 2;
    R1 = std::min(R1, ib);
    const RateOfChange alpha{static_cast<int>(rng() % 11)};
    const auto got = thresholds({R1, R2, false, false}, alpha, l, false);
    const auto want = oracle::case_table(R1, R2, alpha.value(), l, false);
    auto branch = [](int row) {
      if (row == 2) return ThresholdBranch::widened;
      if (row == 3) return ThresholdBranch::narrowed;
      return ThresholdBranch::held;
    };
    if (std::abs(got.r1 - want.r1) > kOracleTolerance || std::abs(got.r2 - want.r2) > kOracleTolerance ||
        got.upper_branch != branch(want.upper_case) || got.lower_branch != branch(want.lower_case)) {
      ++mismatches;
    }
  }
  const bool ok = stats.violations == 0 && stats.oracle_checks >= kMinOracleSteps &&
                  stats.max_average_error <= kOracleTolerance &&
                  stats.max_threshold_error <= kOracleTolerance && mismatches == 0;
  return check(ok, testing::describe(stats) + "; " + std::to_string(kMinCaseTuples) + " tuples, " +
                       std::to_string(mismatches) + " mismatches");
}

Result invariant_suite() {
  testing::CheckStats stats;
  stats.merge(checked_run(testing::random_stream({make_timestamp(2008, 5, 1), 1min, 4000, 0.0, 32.0, 0.0, 11}),
                          5, 1min, 3));
  stats.merge(checked_run(testing::random_stream({make_timestamp(2008, 5, 1), 1min, 2000, 0.0, 6.0, 0.0, 12}),
                          3, 1min, 4));
  stats.merge(checked_run(testing::random_stream({make_timestamp(2007, 1, 1), 60min, 15000, 0.5, 20.0, 0.1, 13}),
                          7, 60min, 5));
  stats.merge(checked_run(testing::random_stream({make_timestamp(2009, 2, 1), 10min, 5000, 4.0, 31.0, 0.02, 14}),
                          1, 10min, 6));

  // Bit-identical replay.
  const auto stream = testing::random_stream({make_timestamp(2008, 5, 1), 1min, 3000, 0.0, 32.0, 0.05, 15});
  auto replay = [&] {
    ProfiledDetector d(DetectorConfig{CurrentLimits{}, 6, 1min});
    std::vector<std::optional<Verdict>> out;
    for (const Reading& r : stream) out.push_back(d.step(r).verdict);
    return out;
  };
  const auto first = replay();
  const auto second = replay();
  std::size_t replay_diffs = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i].has_value() != second[i].has_value() ||
        (first[i] && (std::memcmp(&first[i]->ratio, &second[i]->ratio, sizeof(double)) != 0 ||
                      !(*first[i] == *second[i])))) {
      ++replay_diffs;
    }
  }
  return check(stats.violations == 0 && replay_diffs == 0,
               testing::describe(stats) + "; replay differences " + std::to_string(replay_diffs));
}

Result hierarchy() {
  std::vector<GridNode> nodes{{"cc", Level::cc, {"nan"}, {}, false},
                              {"nan", Level::nan, {"ban0", "ban1"}, {}, false},
                              {"ban0", Level::ban, {}, {}, false},
                              {"ban1", Level::ban, {}, {}, false}};
  for (int i = 0; i < 8; ++i) {
    const std::string id = "h" + std::to_string(i);
    nodes[i < 4 ? 2 : 3].children.push_back(id);
    nodes.push_back({id, Level::han, {}, {}, false});
  }
  DetectorConfig cfg;
  cfg.window_length = 5;
  cfg.sampling_period = 10min;
  GridSimulator sim(GridTopology(nodes), cfg);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(8.5, 11.5);
  auto honest = [&] {
    std::map<std::string, double> m;
    for (int i = 0; i < 8; ++i) m["h" + std::to_string(i)] = u(rng);
    return m;
  };
  std::size_t honest_alerts = 0;
  Timestamp t = make_timestamp(2009, 4, 6);
  for (; t < make_timestamp(2009, 4, 7); t += 10min) honest_alerts += sim.tick(t, honest()).size();

  auto forged = honest();
  forged["h5"] = 25.0;
  const auto alerts = sim.tick(t, forged);
  const std::vector<std::string> ancestors{"ban1", "nan", "cc"};
  std::map<std::string, double> before;
  for (const auto& id : ancestors) before[id] = *sim.reported(id);
  const bool flagged = !alerts.empty() && alerts.front().node == "h5" && alerts.front().path.back() == "cc";

  // Same readings again; h5 is now quarantined and its reading is ignored.
  sim.tick(t + 10min, forged);
  double worst = 0.0;
  for (const auto& id : ancestors) {
    worst = std::max(worst, std::abs((before[id] - *sim.reported(id)) - forged["h5"]));
  }
  const bool ok = honest_alerts == 0 && flagged && worst <= kConservationTolerance;
  return check(ok, std::to_string(honest_alerts) + " honest-day alerts; forged leaf " +
                       (flagged ? "flagged with path to cc" : "not flagged") +
                       "; max ancestor drop error " + num(worst, 12));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: enthm_acceptance [--criterion N]\n";
      return 1;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "rate-of-change worked example", worked_alpha_example},
      {2, "forged 25 A reading ratio", table_one_verification},
      {3, "21 Nov 2010 window scenario", uci_window_scenario},
      {4, "end-to-end metrics and runtime", end_to_end_metrics},
      {5, "oracle equivalence", oracle_equivalence},
      {6, "invariant suite", invariant_suite},
      {7, "grid hierarchy", hierarchy},
  };

  int failures = 0;
  int skips = 0;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (only && c.id != *only) continue;
    ++ran;
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::skip ? "SKIP" : "FAIL";
    std::cout << tag << " criterion " << c.id << " (" << c.name << "): " << r.detail << std::endl;
    if (r.outcome == Outcome::fail) ++failures;
    if (r.outcome == Outcome::skip) ++skips;
  }
  if (ran == 0) {
    std::cerr << "no such criterion\n";
    return 1;
  }
  if (failures > 0) return 1;
  if (only && skips == ran) return kSkipped;
  return 0;
}

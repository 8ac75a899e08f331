#include "enthm/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "enthm/eval.hpp"
#include "enthm/hierarchy.hpp"
#include "enthm/ingest.hpp"

namespace enthm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  DetectorConfig detector{};
  ProfileBoundaries boundaries{};
  std::optional<std::uint64_t> seed;

  std::string input;
  std::string output;
  std::string trace;
  std::string manifest;
  std::string verdicts;
  std::string topology;

  std::size_t attack_count = 500;
  std::optional<double> attack_value;
  std::optional<double> attack_factor;
  std::string attack_values_file;

  std::string synth_start = "2007-01-01";
  std::string synth_end = "2009-01-01";
  double synth_noise = 1.5;
  std::array<double, ProfileKey::count> amplitudes = default_amplitudes();
};

// Flags as given on the command line; unset flags leave config-file values.
struct Flags {
  std::string config;
  std::optional<std::string> input, output, trace, manifest, verdicts, topology;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> t_window;
  std::optional<double> i_max, i_b, a_limit;
  std::optional<int> period_minutes;
  std::optional<std::size_t> count;
  std::optional<double> value, factor, noise;
  std::optional<std::string> values_file, start, end;
};

std::chrono::minutes parse_clock(const std::string& text) {
  unsigned h = 0, m = 0;
  if (text.size() != 5 || text[2] != ':' ||
      std::from_chars(text.data(), text.data() + 2, h).ptr != text.data() + 2 ||
      std::from_chars(text.data() + 3, text.data() + 5, m).ptr != text.data() + 5 || m > 59 ||
      h > 24 || (h == 24 && m != 0)) {
    throw InvalidArgument("expected HH:MM, got '" + text + "'");
  }
  return std::chrono::minutes{h * 60 + m};
}

Season parse_season(const std::string& s) {
  if (s == "winter") return Season::winter;
  if (s == "spring") return Season::spring;
  if (s == "summer") return Season::summer;
  if (s == "autumn") return Season::autumn;
  throw InvalidArgument("unknown season '" + s + "'");
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
    if (doc.contains("t_window")) cfg.detector.window_length = doc["t_window"].get<std::size_t>();
    if (doc.contains("i_max")) cfg.detector.limits.b = doc["i_max"].get<double>();
    if (doc.contains("i_b")) cfg.detector.limits.i_b = doc["i_b"].get<double>();
    if (doc.contains("a_limit")) cfg.detector.limits.a = doc["a_limit"].get<double>();
    if (doc.contains("period_minutes")) {
      cfg.detector.sampling_period = std::chrono::minutes{doc["period_minutes"].get<int>()};
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    for (auto [key, field] : {std::pair{"input", &cfg.input}, {"output", &cfg.output},
                              {"trace", &cfg.trace}, {"manifest", &cfg.manifest},
                              {"verdicts", &cfg.verdicts}, {"topology", &cfg.topology}}) {
      if (doc.contains(key)) *field = doc[key].get<std::string>();
    }
    if (doc.contains("profiles")) {
      const json& p = doc["profiles"];
      if (p.contains("season_months")) {
        std::array<bool, 12> assigned{};
        for (const auto& [season, months] : p["season_months"].items()) {
          const Season s = parse_season(season);
          for (int m : months.get<std::vector<int>>()) {
            if (m < 1 || m > 12) throw InvalidArgument("month out of range");
            cfg.boundaries.season_of_month[m - 1] = s;
            assigned[m - 1] = true;
          }
        }
        for (bool a : assigned) {
          if (!a) throw InvalidArgument("season_months must cover all twelve months");
        }
      }
      if (p.contains("day_start")) cfg.boundaries.day_start = parse_clock(p["day_start"].get<std::string>());
      if (p.contains("day_end")) cfg.boundaries.day_end = parse_clock(p["day_end"].get<std::string>());
      if (p.contains("weekend_days")) {
        cfg.boundaries.weekend.fill(false);
        for (int d : p["weekend_days"].get<std::vector<int>>()) {
          if (d < 0 || d > 6) throw InvalidArgument("weekend day must be 0 (Sunday) .. 6");
          cfg.boundaries.weekend[d] = true;
        }
      }
    }
    if (doc.contains("attack")) {
      const json& a = doc["attack"];
      if (a.contains("count")) cfg.attack_count = a["count"].get<std::size_t>();
      if (a.contains("value")) cfg.attack_value = a["value"].get<double>();
      if (a.contains("factor")) cfg.attack_factor = a["factor"].get<double>();
      if (a.contains("values_file")) cfg.attack_values_file = a["values_file"].get<std::string>();
    }
    if (doc.contains("synth")) {
      const json& s = doc["synth"];
      if (s.contains("start")) cfg.synth_start = s["start"].get<std::string>();
      if (s.contains("end")) cfg.synth_end = s["end"].get<std::string>();
      if (s.contains("noise")) cfg.synth_noise = s["noise"].get<double>();
      if (s.contains("amplitudes")) {
        for (const auto& [key, v] : s["amplitudes"].items()) {
          bool found = false;
          for (std::size_t i = 0; i < ProfileKey::count; ++i) {
            if (to_string(ProfileKey::from_index(i)) == key) {
              cfg.amplitudes[i] = v.get<double>();
              found = true;
            }
          }
          if (!found) throw InvalidArgument("unknown profile '" + key + "'");
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error("config file '" + path + "': " + e.what());
  }
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (!f.config.empty()) apply_config_file(f.config, cfg);
  auto take = [](const auto& flag, auto& field) {
    if (flag) field = *flag;
  };
  take(f.input, cfg.input);
  take(f.output, cfg.output);
  take(f.trace, cfg.trace);
  take(f.manifest, cfg.manifest);
  take(f.verdicts, cfg.verdicts);
  take(f.topology, cfg.topology);
  if (f.seed) cfg.seed = f.seed;
  take(f.t_window, cfg.detector.window_length);
  take(f.i_max, cfg.detector.limits.b);
  take(f.i_b, cfg.detector.limits.i_b);
  take(f.a_limit, cfg.detector.limits.a);
  if (f.period_minutes) cfg.detector.sampling_period = std::chrono::minutes{*f.period_minutes};
  take(f.count, cfg.attack_count);
  if (f.value) cfg.attack_value = f.value;
  if (f.factor) cfg.attack_factor = f.factor;
  take(f.values_file, cfg.attack_values_file);
  take(f.noise, cfg.synth_noise);
  take(f.start, cfg.synth_start);
  take(f.end, cfg.synth_end);
  cfg.detector.validate();
  cfg.boundaries.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its values");
  cmd->add_option("--input", f.input, "Input stream (UCI or canonical CSV)");
  cmd->add_option("--output", f.output, "Output path");
  cmd->add_option("--seed", f.seed, "PRNG seed");
  cmd->add_option("--t-window", f.t_window, "Window length T (windows hold T+1 samples)");
  cmd->add_option("--i-max", f.i_max, "Maximum allowed intensity b, amperes");
  cmd->add_option("--i-b", f.i_b, "Basic current, amperes");
  cmd->add_option("--a-limit", f.a_limit, "Lower current limit a, amperes");
  cmd->add_option("--period-minutes", f.period_minutes, "Sampling period in minutes");
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw Error("an output path is required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  if (path.empty()) throw Error("an input path is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

int cmd_detect(const RunConfig& cfg, std::ostream& out) {
  auto in = open_in(cfg.input);
  const auto stream = read_stream(in);
  auto verdicts = open_out(cfg.output);
  auto trace = open_out(cfg.trace.empty() ? cfg.output + ".trace.csv" : cfg.trace);
  trace << "timestamp,GI,R1,R2,r1,r2,alpha,valid\n";

  ProfiledDetector detector(cfg.detector, cfg.boundaries);
  std::size_t invalid = 0;
  std::size_t judged = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Reading& r = stream[i].reading;
    const auto step = detector.step(r);
    const std::string ts = format_iso(r.timestamp);
    json line = {{"index", i}, {"timestamp", ts}, {"profile", to_string(step.key)},
                 {"intensity", r.intensity}};
    if (!step.verdict) {
      line["status"] = "warmup";
      trace << ts << ',' << fmt(r.intensity) << ",,,,,,\n";
    } else {
      const Verdict& v = *step.verdict;
      const Thresholds& th = v.thresholds_used;
      ++judged;
      if (!v.valid) ++invalid;
      line["status"] = v.valid ? "valid" : "invalid";
      line["ratio"] = v.ratio;
      line["valid"] = v.valid;
      line["r1"] = th.r1;
      line["r2"] = th.r2;
      line["R1"] = th.source.r1_bar;
      line["R2"] = th.source.r2_bar;
      line["alpha"] = th.alpha.value();
      line["initial"] = th.is_initial;
      line["fallback"] = {{"R1", th.source.r1_fallback_used}, {"R2", th.source.r2_fallback_used}};
      trace << ts << ',' << fmt(r.intensity) << ',' << fmt(th.source.r1_bar) << ','
            << fmt(th.source.r2_bar) << ',' << fmt(th.r1) << ',' << fmt(th.r2) << ','
            << fmt(th.alpha.value()) << ',' << (v.valid ? 1 : 0) << '\n';
    }
    verdicts << line.dump() << '\n';
  }
  out << json{{"readings", stream.size()}, {"verdicts", judged}, {"invalid", invalid}}.dump() << '\n';
  return invalid > 0 ? kExitTheft : kExitClean;
}

int cmd_inject(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.seed) throw Error("inject requires --seed");
  auto in = open_in(cfg.input);
  const auto stream = read_stream(in);
  std::vector<Reading> readings;
  readings.reserve(stream.size());
  for (const auto& lr : stream) readings.push_back(lr.reading);

  AttackSpec spec;
  spec.count = cfg.attack_count;
  spec.seed = *cfg.seed;
  const int sources = (cfg.attack_value ? 1 : 0) + (cfg.attack_factor ? 1 : 0) +
                      (cfg.attack_values_file.empty() ? 0 : 1);
  if (sources > 1) throw Error("choose one of --value, --factor, --values-file");
  if (cfg.attack_factor) {
    spec.value_source = MultiplicativeFactor{*cfg.attack_factor};
  } else if (!cfg.attack_values_file.empty()) {
    auto vf = open_in(cfg.attack_values_file);
    spec.value_source = ExternalValues{read_value_file(vf)};
  } else {
    spec.value_source = ConstantValue{cfg.attack_value.value_or(25.0)};
  }

  const auto eligible = eligible_positions(readings, cfg.detector.window_length, cfg.boundaries);
  const LabeledStream labeled = inject(readings, spec, eligible);

  auto csv = open_out(cfg.output);
  write_canonical(csv, labeled.readings, labeled.labels);
  auto manifest = open_out(cfg.manifest.empty() ? cfg.output + ".manifest.json" : cfg.manifest);
  manifest << to_json(labeled.manifest).dump(2) << '\n';
  out << json{{"readings", readings.size()}, {"injected", labeled.manifest.injections.size()},
              {"eligible_positions", eligible.size()}}.dump()
      << '\n';
  return kExitClean;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  auto label_in = open_in(cfg.input);
  const auto labeled = read_stream(label_in);
  auto verdict_in = open_in(cfg.verdicts);

  std::map<Timestamp, std::optional<Verdict>> by_time;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(verdict_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const Timestamp t = parse_iso(j.at("timestamp").get<std::string>());
      std::optional<Verdict> v;
      if (j.at("status").get<std::string>() != "warmup") {
        v = Verdict{};
        v->query_timestamp = t;
        v->ratio = j.at("ratio").get<double>();
        v->valid = j.at("valid").get<bool>();
      }
      if (!by_time.emplace(t, v).second) {
        throw AlignmentError("duplicate verdict for " + format_iso(t));
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (by_time.size() != labeled.size()) {
    throw AlignmentError("verdict count " + std::to_string(by_time.size()) +
                         " does not match label count " + std::to_string(labeled.size()));
  }
  std::vector<std::optional<Verdict>> verdicts;
  std::vector<bool> labels;
  for (const auto& lr : labeled) {
    auto it = by_time.find(lr.reading.timestamp);
    if (it == by_time.end()) {
      throw AlignmentError("no verdict for label at " + format_iso(lr.reading.timestamp));
    }
    verdicts.push_back(it->second);
    labels.push_back(lr.label);
  }
  const json report = to_json(metrics(score(verdicts, labels)));
  out << report.dump(2) << '\n';
  if (!cfg.output.empty()) open_out(cfg.output) << report.dump(2) << '\n';
  return kExitClean;
}

std::vector<LabeledReading> load_leaf_stream(const fs::path& base, const StreamBinding& binding) {
  const fs::path p = fs::path(binding.path).is_absolute() ? fs::path(binding.path) : base / binding.path;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open leaf stream '" + p.string() + "'");
  const bool uci = in.peek() == 'D';
  const std::string expected = uci ? "Global_intensity" : "intensity_amps";
  if (binding.column != expected) {
    throw TopologyError("stream '" + p.string() + "' has no column '" + binding.column + "'");
  }
  return read_stream(in);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  auto topo_in = open_in(cfg.topology);
  json doc;
  try {
    doc = json::parse(topo_in);
  } catch (const json::exception& e) {
    throw TopologyError(std::string("topology: ") + e.what());
  }
  GridTopology topology = GridTopology::from_json(doc, /*require_streams=*/true);
  const fs::path base = fs::path(cfg.topology).parent_path();

  std::map<Timestamp, std::map<std::string, double>> ticks;
  for (const std::string& leaf : topology.leaves()) {
    for (const auto& lr : load_leaf_stream(base, *topology.node(leaf).stream)) {
      ticks[lr.reading.timestamp][leaf] = lr.reading.intensity;
    }
  }

  GridSimulator sim(std::move(topology), cfg.detector, cfg.boundaries);
  auto alerts_out = open_out(cfg.output);
  std::size_t alerts = 0;
  for (const auto& [t, readings] : ticks) {
    for (const Alert& a : sim.tick(t, readings)) {
      alerts_out << to_json(a).dump() << '\n';
      ++alerts;
    }
  }
  out << json{{"ticks", ticks.size()}, {"alerts", alerts}, {"gaps", sim.gaps().size()}}.dump() << '\n';
  return alerts > 0 ? kExitTheft : kExitClean;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.seed) throw Error("synth requires --seed");
  SynthesisSpec spec;
  spec.amplitudes = cfg.amplitudes;
  spec.noise_scale = cfg.synth_noise;
  spec.start = parse_iso(cfg.synth_start);
  spec.end = parse_iso(cfg.synth_end);
  spec.period = cfg.detector.sampling_period;
  spec.seed = *cfg.seed;
  spec.upper_clamp = cfg.detector.limits.b;
  spec.boundaries = cfg.boundaries;
  for (double a : spec.amplitudes) {
    if (!(a > cfg.detector.limits.a && a < cfg.detector.limits.b)) {
      throw InvalidArgument("bucket amplitudes must lie inside (a, b)");
    }
  }
  const auto readings = synthesize(spec);
  auto csv = open_out(cfg.output);
  write_canonical(csv, readings, {});
  out << json{{"readings", readings.size()}}.dump() << '\n';
  return kExitClean;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming energy-theft detection with hierarchical meter verification", "enthm"};
  app.require_subcommand(1);
  Flags f;

  auto* detect = app.add_subcommand("detect", "Verify a reading stream, write verdicts and a trace");
  add_common(detect, f);
  detect->add_option("--trace", f.trace, "Trace CSV path (default: <output>.trace.csv)");

  auto* inject_cmd = app.add_subcommand("inject", "Overwrite random eligible readings with forged values");
  add_common(inject_cmd, f);
  inject_cmd->add_option("--manifest", f.manifest, "Manifest path (default: <output>.manifest.json)");
  inject_cmd->add_option("--count", f.count, "Number of injections");
  inject_cmd->add_option("--value", f.value, "Constant forged value, amperes (default 25)");
  inject_cmd->add_option("--factor", f.factor, "Multiply the true value by this factor");
  inject_cmd->add_option("--values-file", f.values_file, "File of forged values, one per line");

  auto* eval_cmd = app.add_subcommand("eval", "Score verdicts against labels");
  add_common(eval_cmd, f);
  eval_cmd->add_option("--verdicts", f.verdicts, "Verdict JSON lines written by detect");

  auto* simulate = app.add_subcommand("simulate", "Run hierarchical verification over a topology");
  add_common(simulate, f);
  simulate->add_option("--topology", f.topology, "Topology JSON document");

  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic reading stream");
  add_common(synth, f);
  synth->add_option("--start", f.start, "First timestamp (YYYY-MM-DD[THH:MM])");
  synth->add_option("--end", f.end, "Exclusive end timestamp");
  synth->add_option("--noise", f.noise, "Uniform noise half-width, amperes");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitClean : kExitError;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (detect->parsed()) return cmd_detect(cfg, out);
    if (inject_cmd->parsed()) return cmd_inject(cfg, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out);
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (synth->parsed()) return cmd_synth(cfg, out);
  } catch (const std::exception& e) {
    err << "enthm: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace enthm::cli

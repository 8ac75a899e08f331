#include "enthm/hierarchy.hpp"

#include <cmath>
#include <functional>

namespace enthm {

const char* to_string(Level level) noexcept {
  switch (level) {
    case Level::cc: return "CC";
    case Level::nan: return "NAN";
    case Level::ban: return "BAN";
    case Level::han: return "HAN";
  }
  return "?";
}

Level parse_level(const std::string& text) {
  if (text == "CC") return Level::cc;
  if (text == "NAN") return Level::nan;
  if (text == "BAN") return Level::ban;
  if (text == "HAN") return Level::han;
  throw TopologyError("unknown level '" + text + "'");
}

GridTopology::GridTopology(std::vector<GridNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw TopologyError("topology has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id.empty()) throw TopologyError("node id must not be empty");
    if (!index_.emplace(nodes_[i].id, i).second) {
      throw TopologyError("duplicate node id '" + nodes_[i].id + "'");
    }
  }

  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].level != Level::cc) continue;
    if (root) throw TopologyError("more than one CC node");
    root = i;
  }
  if (!root) throw TopologyError("no CC node");
  root_ = *root;

  parent_.assign(nodes_.size(), std::nullopt);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const std::string& c : nodes_[i].children) {
      auto it = index_.find(c);
      if (it == index_.end()) {
        throw TopologyError("node '" + nodes_[i].id + "' lists unknown child '" + c + "'");
      }
      if (parent_[it->second]) {
        throw TopologyError("node '" + c + "' has more than one parent");
      }
      parent_[it->second] = i;
    }
  }

  // Walk from the root; revisiting a node means a cycle.
  std::vector<int> state(nodes_.size(), 0);  // 0 unseen, 1 on stack, 2 done
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 1) throw TopologyError("cycle through node '" + nodes_[i].id + "'");
    if (state[i] == 2) return;
    state[i] = 1;
    for (const std::string& c : nodes_[i].children) visit(index_.at(c));
    state[i] = 2;
    post_order_.push_back(nodes_[i].id);
  };
  if (parent_[root_]) throw TopologyError("cycle through the CC node");
  visit(root_);
  if (post_order_.size() != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (state[i] == 0) {
        throw TopologyError("node '" + nodes_[i].id + "' is not reachable from CC (cycle or disconnected)");
      }
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const GridNode& n = nodes_[i];
    if ((n.level == Level::han) != n.children.empty()) {
      throw TopologyError("node '" + n.id + "': only HAN nodes are leaves");
    }
    for (const std::string& c : n.children) {
      const Level child = nodes_[index_.at(c)].level;
      if (static_cast<int>(child) != static_cast<int>(n.level) + 1) {
        throw TopologyError("edge " + n.id + " -> " + c + " does not descend one level");
      }
    }
  }
}

GridTopology GridTopology::from_json(const nlohmann::json& doc, bool require_streams) {
  try {
    std::vector<GridNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      GridNode n;
      n.id = jn.at("id").get<std::string>();
      n.level = parse_level(jn.at("level").get<std::string>());
      if (jn.contains("children")) n.children = jn.at("children").get<std::vector<std::string>>();
      if (jn.contains("stream")) {
        StreamBinding s;
        s.path = jn.at("stream").at("path").get<std::string>();
        if (jn.at("stream").contains("column")) s.column = jn.at("stream").at("column").get<std::string>();
        n.stream = s;
      }
      nodes.push_back(std::move(n));
    }
    GridTopology topo(std::move(nodes));
    if (require_streams) {
      for (const GridNode& n : topo.nodes()) {
        if (n.level == Level::han && !n.stream) {
          throw TopologyError("leaf '" + n.id + "' has no stream binding");
        }
      }
    }
    return topo;
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(std::string("topology document: ") + e.what());
  }
}

std::size_t GridTopology::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw TopologyError("unknown node '" + id + "'");
  return it->second;
}

const GridNode& GridTopology::node(const std::string& id) const { return nodes_[index_of(id)]; }

const std::string* GridTopology::parent(const std::string& id) const {
  const auto p = parent_[index_of(id)];
  return p ? &nodes_[*p].id : nullptr;
}

std::vector<std::string> GridTopology::path_to_root(const std::string& id) const {
  std::vector<std::string> path;
  std::optional<std::size_t> i = index_of(id);
  while (i) {
    path.push_back(nodes_[*i].id);
    i = parent_[*i];
  }
  return path;
}

std::vector<std::string> GridTopology::leaves() const {
  std::vector<std::string> out;
  for (const std::string& id : post_order_) {
    if (node(id).level == Level::han) out.push_back(id);
  }
  return out;
}

std::size_t GridTopology::active_leaf_count(const std::string& id) const {
  const GridNode& n = node(id);
  if (n.quarantined) return 0;
  if (n.level == Level::han) return 1;
  std::size_t total = 0;
  for (const std::string& c : n.children) total += active_leaf_count(c);
  return total;
}

void GridTopology::set_subtree(std::size_t i, bool flag) {
  nodes_[i].quarantined = flag;
  for (const std::string& c : nodes_[i].children) set_subtree(index_.at(c), flag);
}

void GridTopology::quarantine(const std::string& id) {
  const std::size_t i = index_of(id);
  if (i == root_) throw TopologyError("the CC node cannot be quarantined");
  set_subtree(i, true);
}

void GridTopology::release(const std::string& id) {
  const std::size_t i = index_of(id);
  if (i == root_) throw TopologyError("the CC node cannot be quarantined");
  set_subtree(i, false);
}

Reading aggregate(std::span<const Reading> children) {
  if (children.empty()) throw InvalidArgument("nothing to aggregate");
  Reading out{children.front().timestamp, 0.0};
  for (const Reading& r : children) {
    if (r.timestamp != out.timestamp) {
      throw AlignmentError("aggregated readings do not share a timestamp");
    }
    out.intensity += r.intensity;
  }
  return out;
}

CurrentLimits scale_limits(const CurrentLimits& leaf, std::size_t active_leaves) {
  if (active_leaves < 1) throw InvalidArgument("active child count must be at least 1");
  const double k = static_cast<double>(active_leaves);
  return {leaf.a, leaf.i_b * k, leaf.b * k};
}

nlohmann::json to_json(const Alert& a) {
  return {{"node", a.node},
          {"timestamp", format_iso(a.timestamp)},
          {"ratio", a.verdict.ratio},
          {"path", a.path},
          {"kind", a.kind == AlertKind::child ? "child" : "aggregate"},
          {"verified_by", a.verified_by},
          {"intensity", a.verdict.intensity},
          {"r1", a.verdict.thresholds_used.r1},
          {"r2", a.verdict.thresholds_used.r2}};
}

GridSimulator::GridSimulator(GridTopology topology, DetectorConfig leaf_config,
                             ProfileBoundaries boundaries, bool auto_quarantine)
    : topology_(std::move(topology)), leaf_config_(leaf_config), auto_quarantine_(auto_quarantine) {
  leaf_config_.validate();
  for (const GridNode& n : topology_.nodes()) {
    DetectorConfig cfg = leaf_config_;
    cfg.limits = scale_limits(leaf_config_.limits, std::max<std::size_t>(1, topology_.active_leaf_count(n.id)));
    if (n.level != Level::cc) child_detectors_.emplace(n.id, ProfiledDetector(cfg, boundaries));
    if (n.level != Level::han) aggregate_detectors_.emplace(n.id, ProfiledDetector(cfg, boundaries));
  }
}

void GridSimulator::refresh_limits() {
  auto update = [&](const std::string& id, ProfiledDetector& det) {
    const std::size_t active = topology_.active_leaf_count(id);
    if (active == 0) return;
    const CurrentLimits want = scale_limits(leaf_config_.limits, active);
    if (!(det.config().limits == want)) det.set_limits(want);
  };
  for (auto& [id, det] : child_detectors_) update(id, det);
  for (auto& [id, det] : aggregate_detectors_) update(id, det);
}

void GridSimulator::quarantine(const std::string& id) {
  topology_.quarantine(id);
  refresh_limits();
}

void GridSimulator::release(const std::string& id) {
  topology_.release(id);
  refresh_limits();
}

std::optional<double> GridSimulator::reported(const std::string& id) const {
  auto it = reported_.find(id);
  if (it == reported_.end()) return std::nullopt;
  return it->second;
}

const ProfiledDetector& GridSimulator::child_detector(const std::string& id) const {
  auto it = child_detectors_.find(id);
  if (it == child_detectors_.end()) throw TopologyError("no child detector for '" + id + "'");
  return it->second;
}

const ProfiledDetector& GridSimulator::aggregate_detector(const std::string& id) const {
  auto it = aggregate_detectors_.find(id);
  if (it == aggregate_detectors_.end()) throw TopologyError("no aggregate detector for '" + id + "'");
  return it->second;
}

std::vector<Alert> GridSimulator::tick(Timestamp t, const std::map<std::string, double>& leaf_readings) {
  reported_.clear();
  for (const auto& [id, value] : leaf_readings) {
    if (topology_.node(id).level != Level::han) {
      throw TopologyError("reading supplied for non-leaf node '" + id + "'");
    }
    validate(Reading{t, value});
  }

  // Reported readings, children before parents.
  for (const std::string& id : topology_.bottom_up()) {
    const GridNode& n = topology_.node(id);
    if (n.quarantined) continue;
    if (n.level == Level::han) {
      auto it = leaf_readings.find(id);
      if (it == leaf_readings.end()) {
        gaps_.push_back({id, t});
      } else {
        reported_[id] = it->second;
      }
      continue;
    }
    std::vector<Reading> present;
    for (const std::string& c : n.children) {
      if (auto v = reported(c)) present.push_back({t, *v});
    }
    if (present.empty()) {
      gaps_.push_back({id, t});
    } else {
      reported_[id] = aggregate(present).intensity;
    }
  }

  std::vector<Alert> alerts;
  std::vector<std::string> flagged;
  for (const std::string& id : topology_.bottom_up()) {
    const GridNode& n = topology_.node(id);
    if (n.quarantined || n.level == Level::han) continue;
    for (const std::string& c : n.children) {
      const auto value = reported(c);
      if (!value) continue;
      auto step = child_detectors_.at(c).step({t, *value});
      if (step.verdict && !step.verdict->valid) {
        alerts.push_back({c, id, AlertKind::child, t, *step.verdict, topology_.path_to_root(c)});
        flagged.push_back(c);
      }
    }
    if (const auto value = reported(id)) {
      auto step = aggregate_detectors_.at(id).step({t, *value});
      if (step.verdict && !step.verdict->valid) {
        alerts.push_back({id, id, AlertKind::aggregate, t, *step.verdict, topology_.path_to_root(id)});
      }
    }
  }

  if (auto_quarantine_ && !flagged.empty()) {
    for (const std::string& id : flagged) topology_.quarantine(id);
    refresh_limits();
  }
  return alerts;
}

}  // namespace enthm

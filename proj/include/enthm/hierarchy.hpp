#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "enthm/profiles.hpp"

namespace enthm {

enum class Level { cc, nan, ban, han };

const char* to_string(Level level) noexcept;
Level parse_level(const std::string& text);

struct StreamBinding {
  std::string path;
  std::string column = "intensity_amps";
};

struct GridNode {
  std::string id;
  Level level = Level::han;
  std::vector<std::string> children;
  std::optional<StreamBinding> stream;  // leaves only
  bool quarantined = false;
};

/// Validated CC -> NAN -> BAN -> HAN tree.
class GridTopology {
 public:
  explicit GridTopology(std::vector<GridNode> nodes);

  /// {"nodes": [{"id", "level", "children", "stream": {"path", "column"}}]}
  static GridTopology from_json(const nlohmann::json& doc, bool require_streams = false);

  const std::vector<GridNode>& nodes() const noexcept { return nodes_; }
  const GridNode& node(const std::string& id) const;
  const std::string& root() const noexcept { return nodes_[root_].id; }
  const std::string* parent(const std::string& id) const;

  /// Flagged node first, CC last.
  std::vector<std::string> path_to_root(const std::string& id) const;
  std::vector<std::string> leaves() const;
  /// Children before parents, siblings in declaration order.
  const std::vector<std::string>& bottom_up() const noexcept { return post_order_; }

  std::size_t active_leaf_count(const std::string& id) const;

  /// Flags or clears the node and its whole subtree. The root cannot be
  /// quarantined.
  void quarantine(const std::string& id);
  void release(const std::string& id);

 private:
  std::size_t index_of(const std::string& id) const;
  void set_subtree(std::size_t i, bool flag);

  std::vector<GridNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::string> post_order_;
  std::size_t root_ = 0;
};

/// Sums intensities of readings sharing one timestamp.
Reading aggregate(std::span<const Reading> children);

/// Scales i_b and b by the number of metered households beneath a node.
CurrentLimits scale_limits(const CurrentLimits& leaf_limits, std::size_t active_leaves);

enum class AlertKind {
  child,      // a parent rejected one child's reported reading
  aggregate,  // a node rejected its own aggregate
};

struct Alert {
  std::string node;
  std::string verified_by;
  AlertKind kind = AlertKind::child;
  Timestamp timestamp{};
  Verdict verdict;
  std::vector<std::string> path;
};

nlohmann::json to_json(const Alert& alert);

struct Gap {
  std::string node;
  Timestamp timestamp{};
};

/// Bottom-up verification over a grid: each parent checks every child's
/// reported reading with a per-child detector, then checks its own aggregate.
class GridSimulator {
 public:
  GridSimulator(GridTopology topology, DetectorConfig leaf_config,
                ProfileBoundaries boundaries = {}, bool auto_quarantine = true);

  /// Leaves absent from `leaf_readings` are recorded as gaps.
  std::vector<Alert> tick(Timestamp t, const std::map<std::string, double>& leaf_readings);

  void quarantine(const std::string& id);
  void release(const std::string& id);

  const GridTopology& topology() const noexcept { return topology_; }
  /// Reported intensity of the node at the last tick (aggregate for non-leaves).
  std::optional<double> reported(const std::string& id) const;
  const std::vector<Gap>& gaps() const noexcept { return gaps_; }
  const ProfiledDetector& child_detector(const std::string& id) const;
  const ProfiledDetector& aggregate_detector(const std::string& id) const;

 private:
  void refresh_limits();

  GridTopology topology_;
  DetectorConfig leaf_config_;
  bool auto_quarantine_;
  std::unordered_map<std::string, ProfiledDetector> child_detectors_;
  std::unordered_map<std::string, ProfiledDetector> aggregate_detectors_;
  std::unordered_map<std::string, double> reported_;
  std::vector<Gap> gaps_;
};

}  // namespace enthm

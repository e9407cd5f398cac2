#pragma once

#include <algorithm>
#include <limits>
#include <string>

#include "constell/core.hpp"

namespace constell {

/// Edge threshold selection. mean_pairwise reads the "average distance
/// between two nodes" as the mean over all unordered pairs of the global
/// map; mean_nearest is the sparser alternative reading (mean distance to
/// the nearest neighbor). explicit_value uses edge_threshold as given.
struct GraphConfig {
  enum class ThresholdMode { explicit_value, mean_pairwise, mean_nearest };

  ThresholdMode threshold_mode = ThresholdMode::mean_pairwise;
  double edge_threshold = 0.0;  // meters, used when explicit_value
  double visual_range = 30.0;   // meters
  bool include_self_loops = true;
};

/// Center object plus every map object within visual_range (boundary
/// inclusive). Throws NotFoundError for an unknown center id.
inline Constellation extract_constellation(const ObjectMap& map, std::int64_t center_id,
                                           double visual_range) {
  const SemanticObject* center = map.find(center_id);
  if (!center)
    throw NotFoundError("extract_constellation: no object with instance_id " +
                        std::to_string(center_id));
  Constellation c;
  c.center = *center;
  c.origin = center->position;
  for (const auto& o : map.objects)
    if ((o.position - center->position).norm() <= visual_range) c.members.push_back(o);
  return c;
}

/// Mean Euclidean distance over all unordered object pairs.
inline double auto_edge_threshold(const ObjectMap& map) {
  const std::size_t n = map.objects.size();
  if (n < 2)
    throw DegenerateInput("auto_edge_threshold: need at least 2 objects");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum += (map.objects[i].position - map.objects[j].position).norm();
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Mean distance from each object to its nearest neighbor.
inline double mean_nearest_neighbor_distance(const ObjectMap& map) {
  const std::size_t n = map.objects.size();
  if (n < 2)
    throw DegenerateInput("mean_nearest_neighbor_distance: need at least 2 objects");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      best = std::min(best, (map.objects[i].position - map.objects[j].position).norm());
    }
    sum += best;
  }
  return sum / static_cast<double>(n);
}

/// Resolve an auto threshold mode against the reference (global) map,
/// returning a config with an explicit edge_threshold.
inline GraphConfig resolve_graph_config(GraphConfig cfg, const ObjectMap& reference_map) {
  switch (cfg.threshold_mode) {
    case GraphConfig::ThresholdMode::explicit_value:
      break;
    case GraphConfig::ThresholdMode::mean_pairwise:
      cfg.edge_threshold = auto_edge_threshold(reference_map);
      break;
    case GraphConfig::ThresholdMode::mean_nearest:
      cfg.edge_threshold = mean_nearest_neighbor_distance(reference_map);
      break;
  }
  cfg.threshold_mode = GraphConfig::ThresholdMode::explicit_value;
  if (cfg.edge_threshold <= 0.0)
    throw ContractViolation("GraphConfig: edge_threshold must be positive");
  return cfg;
}

/// Build the constellation graph: node positions relative to the origin,
/// an undirected edge for every pair within the threshold (inclusive) and
/// one self-loop per node. Nodes are ordered by instance_id.
inline ConstellationGraph build_graph(const Constellation& c, const GraphConfig& cfg) {
  if (c.members.empty()) throw DegenerateInput("build_graph: empty constellation");
  if (cfg.threshold_mode != GraphConfig::ThresholdMode::explicit_value)
    throw ContractViolation("build_graph: resolve the threshold mode first");

  ConstellationGraph g;
  g.nodes.reserve(c.members.size());
  std::vector<const SemanticObject*> sorted;
  sorted.reserve(c.members.size());
  for (const auto& m : c.members) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const SemanticObject* a, const SemanticObject* b) {
              return a->instance_id < b->instance_id;
            });

  for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
    GraphNode n;
    n.index = i;
    n.instance_id = sorted[i]->instance_id;
    n.class_label = sorted[i]->class_label;
    n.position = sorted[i]->position - c.origin;
    g.nodes.push_back(n);
    if (sorted[i]->instance_id == c.center.instance_id) g.center_index = i;
  }

  const int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    if (cfg.include_self_loops) g.edges.push_back({i, i, 0.0});
    for (int j = i + 1; j < n; ++j) {
      const double d = (g.nodes[i].position - g.nodes[j].position).norm();
      if (d <= cfg.edge_threshold) g.edges.push_back({i, j, d});
    }
  }
  return g;
}

/// Graph over every object of a map (used for whole-QLSM descriptors).
/// Positions are taken relative to the map centroid; only distances and
/// labels matter to the consumers.
inline ConstellationGraph graph_over_map(const ObjectMap& map, const GraphConfig& cfg) {
  if (map.objects.empty()) throw DegenerateInput("graph_over_map: empty map");
  Constellation c;
  Vec3 centroid = Vec3::Zero();
  for (const auto& o : map.objects) centroid += o.position;
  centroid /= static_cast<double>(map.objects.size());
  c.center = map.objects.front();
  c.origin = centroid;
  c.members = map.objects;
  return build_graph(c, cfg);
}

}  // namespace constell

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace constell {

// Error taxonomy. ContractViolation marks caller bugs (broken preconditions);
// the other two are data conditions a caller may recover from.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec3 = Eigen::Vector3d;

/// One landmark: 3-D centroid, instance id and semantic class label.
struct SemanticObject {
  std::int64_t instance_id = 0;
  int class_label = 0;
  Vec3 position = Vec3::Zero();
};

enum class FrameTag { global, local };

/// Object-centric map. Instance ids are unique, class labels dense in
/// [0, n_classes). frame_tag distinguishes the prior global map from a
/// query local semantic map (QLSM).
struct ObjectMap {
  std::vector<SemanticObject> objects;
  int n_classes = 1;
  FrameTag frame_tag = FrameTag::global;

  const SemanticObject* find(std::int64_t instance_id) const {
    for (const auto& o : objects)
      if (o.instance_id == instance_id) return &o;
    return nullptr;
  }

  void validate() const {
    if (n_classes < 1) throw ContractViolation("ObjectMap: n_classes must be >= 1");
    std::vector<std::int64_t> ids;
    ids.reserve(objects.size());
    for (const auto& o : objects) {
      if (o.class_label < 0 || o.class_label >= n_classes)
        throw ContractViolation("ObjectMap: class_label out of range for object " +
                                std::to_string(o.instance_id));
      if (!o.position.allFinite())
        throw ContractViolation("ObjectMap: non-finite position for object " +
                                std::to_string(o.instance_id));
      ids.push_back(o.instance_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw ContractViolation("ObjectMap: duplicate instance_id");
  }
};

/// A center object plus all neighbors within visual range. Members keep
/// map coordinates; origin == center.position.
struct Constellation {
  SemanticObject center;
  std::vector<SemanticObject> members;  // includes center
  Vec3 origin = Vec3::Zero();
};

struct GraphNode {
  int index = 0;
  std::int64_t instance_id = 0;
  int class_label = 0;
  Vec3 position = Vec3::Zero();  // relative to the constellation origin
};

struct GraphEdge {
  int i = 0, j = 0;
  double distance = 0.0;
};

/// Distance-weighted undirected graph over one constellation. Edges are
/// stored once with i < j; self-loops (i, i, 0) appear once per node.
struct ConstellationGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  int center_index = 0;

  /// Neighbor lists. Self-loops contribute the node itself when
  /// include_self is true.
  std::vector<std::vector<int>> adjacency(bool include_self = true) const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
      if (e.i == e.j) {
        if (include_self) adj[e.i].push_back(e.i);
      } else {
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
      }
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }
};

enum class DescriptorKind { vector, walk_matrix };

/// Fixed-size place representation: a real vector, or an n_w x l_w matrix
/// of class labels visited by random walks.
struct Descriptor {
  DescriptorKind kind = DescriptorKind::vector;
  Eigen::VectorXd values;   // vector kind
  Eigen::MatrixXi walks;    // walk_matrix kind

  static Descriptor from_vector(Eigen::VectorXd v) {
    Descriptor d;
    d.kind = DescriptorKind::vector;
    d.values = std::move(v);
    return d;
  }
  static Descriptor from_walks(Eigen::MatrixXi w) {
    Descriptor d;
    d.kind = DescriptorKind::walk_matrix;
    d.walks = std::move(w);
    return d;
  }
};

/// L2 distance for vector descriptors. Walk matrices compare as row
/// multisets: distance = 1 - (matched rows / n_w), which is symmetric
/// because both matrices hold the same number of walks.
inline double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind)
    throw ContractViolation("descriptor_distance: kind mismatch");
  if (a.kind == DescriptorKind::vector) {
    if (a.values.size() != b.values.size())
      throw ContractViolation("descriptor_distance: dimension mismatch");
    return (a.values - b.values).norm();
  }
  if (a.walks.rows() != b.walks.rows() || a.walks.cols() != b.walks.cols())
    throw ContractViolation("descriptor_distance: walk matrix shape mismatch");
  const int n = static_cast<int>(a.walks.rows());
  if (n == 0) return 0.0;
  std::map<std::vector<int>, int> counts;
  std::vector<int> row(a.walks.cols());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < a.walks.cols(); ++c) row[c] = a.walks(r, c);
    ++counts[row];
  }
  int matched = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < b.walks.cols(); ++c) row[c] = b.walks(r, c);
    auto it = counts.find(row);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return 1.0 - static_cast<double>(matched) / static_cast<double>(n);
}

/// Normalize an angle to (-pi, pi].
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Planar rigid transform (x, y, yaw) applied to 3-D points with z
/// passthrough. Yaw is kept in (-pi, pi].
struct PoseSE2z {
  double x = 0.0, y = 0.0, yaw = 0.0;

  PoseSE2z() = default;
  PoseSE2z(double x_, double y_, double yaw_) : x(x_), y(y_), yaw(normalize_angle(yaw_)) {}

  Vec3 apply(const Vec3& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return Vec3(c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y, p.z());
  }

  PoseSE2z inverse() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return PoseSE2z(-(c * x + s * y), -(-s * x + c * y), -yaw);
  }

  /// this * other: apply `other` first, then this.
  PoseSE2z compose(const PoseSE2z& other) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return PoseSE2z(c * other.x - s * other.y + x, s * other.x + c * other.y + y,
                    yaw + other.yaw);
  }
};

inline Vec3 apply_pose(const PoseSE2z& T, const Vec3& p) { return T.apply(p); }

}  // namespace constell

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "constell/core.hpp"
#include "constell/graph.hpp"
#include "constell/rng.hpp"

namespace constell {

/// Baseline descriptor parameters: n_s = 3 shells of d_s = 10 m, walks of
/// length l_w = 4 with n_w = 30 repetitions, GOS edge bins of 2 m up to 60 m.
struct HandcraftedConfig {
  int n_shells = 3;
  double shell_spacing = 10.0;
  int walk_length = 4;
  int n_walks = 30;
  double gos_distance_bin = 2.0;
  double gos_max_distance = 60.0;

  void validate() const {
    if (n_shells <= 0 || shell_spacing <= 0.0 || walk_length <= 0 || n_walks <= 0 ||
        gos_distance_bin <= 0.0 || gos_max_distance <= 0.0)
      throw ContractViolation("HandcraftedConfig: all parameters must be positive");
  }
};

/// Onion: count of non-center members per radial shell [k*d_s, (k+1)*d_s);
/// objects beyond n_shells*d_s are ignored.
inline Descriptor onion(const Constellation& c, const HandcraftedConfig& cfg) {
  cfg.validate();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.n_shells);
  for (const auto& o : c.members) {
    if (o.instance_id == c.center.instance_id) continue;
    const double d = (o.position - c.origin).norm();
    const int shell = static_cast<int>(std::floor(d / cfg.shell_spacing));
    if (shell >= 0 && shell < cfg.n_shells) v[shell] += 1.0;
  }
  return Descriptor::from_vector(v);
}

/// OnionHist: per-shell class histogram, flattened shell-major
/// (index = shell * n_classes + class).
inline Descriptor onion_hist(const Constellation& c, const HandcraftedConfig& cfg, int n_classes) {
  cfg.validate();
  if (n_classes <= 0) throw ContractViolation("onion_hist: n_classes must be positive");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<long>(cfg.n_shells) * n_classes);
  for (const auto& o : c.members) {
    if (o.instance_id == c.center.instance_id) continue;
    if (o.class_label < 0 || o.class_label >= n_classes)
      throw ContractViolation("onion_hist: class label out of range");
    const double d = (o.position - c.origin).norm();
    const int shell = static_cast<int>(std::floor(d / cfg.shell_spacing));
    if (shell >= 0 && shell < cfg.n_shells) v[shell * n_classes + o.class_label] += 1.0;
  }
  return Descriptor::from_vector(v);
}

/// Random-Walk: n_w uniform walks of l_w steps from the center node. A row
/// stores the class labels of the visited nodes (the start label is not
/// stored). Transitions are uniform over neighbors excluding the self-loop
/// when other neighbors exist; an isolated node keeps its self-loop, so the
/// walk stays put.
inline Descriptor random_walk(const ConstellationGraph& g, const HandcraftedConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  if (g.nodes.empty()) throw DegenerateInput("random_walk: empty graph");

  // Neighbor lists without self-loops.
  std::vector<std::vector<int>> nbrs(g.nodes.size());
  for (const auto& e : g.edges) {
    if (e.i == e.j) continue;
    nbrs[e.i].push_back(e.j);
    nbrs[e.j].push_back(e.i);
  }
  auto rng = make_rng(seed);
  Eigen::MatrixXi walks(cfg.n_walks, cfg.walk_length);
  for (int w = 0; w < cfg.n_walks; ++w) {
    int cur = g.center_index;
    for (int s = 0; s < cfg.walk_length; ++s) {
      if (!nbrs[cur].empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, nbrs[cur].size() - 1);
        cur = nbrs[cur][pick(rng)];
      }
      walks(w, s) = g.nodes[static_cast<std::size_t>(cur)].class_label;
    }
  }
  return Descriptor::from_walks(walks);
}

/// GOSV: class histogram over every object in the QLSM; attached unchanged
/// to each query object of that QLSM.
inline Descriptor gos_vertex(const ObjectMap& qlsm) {
  if (qlsm.n_classes <= 0) throw ContractViolation("gos_vertex: n_classes must be positive");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(qlsm.n_classes);
  for (const auto& o : qlsm.objects) {
    if (o.class_label < 0 || o.class_label >= qlsm.n_classes)
      throw ContractViolation("gos_vertex: class label out of range");
    v[o.class_label] += 1.0;
  }
  return Descriptor::from_vector(v);
}

/// Index of the unordered class pair (a, b), a <= b, in row-major upper
/// triangle order: (0,0), (0,1), ..., (0,n-1), (1,1), ...
inline long gos_pair_index(int a, int b, int n_classes) {
  if (a > b) std::swap(a, b);
  return static_cast<long>(a) * (2 * n_classes - a + 1) / 2 + (b - a);
}

/// GOSG: histogram of non-self-loop edges indexed by (unordered class pair,
/// distance bin of gos_distance_bin meters); edges at or beyond
/// gos_max_distance are ignored. Flattened pair-major.
inline Descriptor gos_graph(const ConstellationGraph& qlsm_graph, const HandcraftedConfig& cfg,
                            int n_classes) {
  cfg.validate();
  if (n_classes <= 0) throw ContractViolation("gos_graph: n_classes must be positive");
  const long n_pairs = static_cast<long>(n_classes) * (n_classes + 1) / 2;
  const long n_bins =
      static_cast<long>(std::ceil(cfg.gos_max_distance / cfg.gos_distance_bin));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_pairs * n_bins);
  for (const auto& e : qlsm_graph.edges) {
    if (e.i == e.j) continue;
    if (!(e.distance < cfg.gos_max_distance)) continue;
    const long bin = static_cast<long>(std::floor(e.distance / cfg.gos_distance_bin));
    const int ca = qlsm_graph.nodes[static_cast<std::size_t>(e.i)].class_label;
    const int cb = qlsm_graph.nodes[static_cast<std::size_t>(e.j)].class_label;
    if (ca < 0 || ca >= n_classes || cb < 0 || cb >= n_classes)
      throw ContractViolation("gos_graph: class label out of range");
    v[gos_pair_index(ca, cb, n_classes) * n_bins + bin] += 1.0;
  }
  return Descriptor::from_vector(v);
}

}  // namespace constell

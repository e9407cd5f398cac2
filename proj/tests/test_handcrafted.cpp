#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "constell/graph.hpp"
#include "constell/handcrafted.hpp"

using namespace constell;

namespace {

std::vector<double> vals(const Descriptor& d) {
  return std::vector<double>(d.values.data(), d.values.data() + d.values.size());
}

Constellation lone_center() {
  Constellation c;
  c.center = {0, 1, Vec3(5, 5, 0)};
  c.origin = c.center.position;
  c.members = {c.center};
  return c;
}

Constellation with_neighbors(const std::vector<std::pair<double, int>>& radius_class) {
  Constellation c = lone_center();
  std::int64_t id = 1;
  double ang = 0.3;
  for (const auto& [r, cls] : radius_class) {
    c.members.push_back({id++, cls, c.origin + Vec3(r * std::cos(ang), r * std::sin(ang), 0)});
    ang += 1.1;
  }
  return c;
}

Constellation random_constellation(std::mt19937_64& rng, int n_classes) {
  std::uniform_real_distribution<double> u(-29, 29);
  std::uniform_int_distribution<int> cls(0, n_classes - 1);
  Constellation c;
  c.center = {0, cls(rng), Vec3(u(rng), u(rng), 0)};
  c.origin = c.center.position;
  c.members.push_back(c.center);
  const int n = 2 + static_cast<int>(rng() % 12);
  for (int i = 1; i <= n; ++i)
    c.members.push_back({i, cls(rng), c.origin + Vec3(u(rng), u(rng), 0)});
  return c;
}

Constellation rotated(const Constellation& c, double ang) {
  const Eigen::Matrix3d R =
      Eigen::AngleAxisd(ang, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Constellation out = c;
  for (auto& o : out.members) o.position = out.origin + R * (o.position - out.origin);
  out.center.position = out.origin;
  return out;
}

ConstellationGraph graph_of(const Constellation& c, double threshold) {
  GraphConfig cfg;
  cfg.threshold_mode = GraphConfig::ThresholdMode::explicit_value;
  cfg.edge_threshold = threshold;
  return build_graph(c, cfg);
}

// Brute-force shell-count oracle.
std::vector<double> onion_oracle(const Constellation& c, const HandcraftedConfig& cfg) {
  std::vector<double> shells(static_cast<std::size_t>(cfg.n_shells), 0.0);
  for (const auto& o : c.members) {
    if (o.instance_id == c.center.instance_id) continue;
    const double d = (o.position - c.origin).norm();
    for (int k = 0; k < cfg.n_shells; ++k)
      if (d >= k * cfg.shell_spacing && d < (k + 1) * cfg.shell_spacing)
        shells[static_cast<std::size_t>(k)] += 1.0;
  }
  return shells;
}

std::vector<double> onion_hist_oracle(const Constellation& c, const HandcraftedConfig& cfg,
                                      int n_classes) {
  std::vector<double> h(static_cast<std::size_t>(cfg.n_shells * n_classes), 0.0);
  for (const auto& o : c.members) {
    if (o.instance_id == c.center.instance_id) continue;
    const double d = (o.position - c.origin).norm();
    for (int k = 0; k < cfg.n_shells; ++k)
      if (d >= k * cfg.shell_spacing && d < (k + 1) * cfg.shell_spacing)
        h[static_cast<std::size_t>(k * n_classes + o.class_label)] += 1.0;
  }
  return h;
}

}  // namespace

TEST(Onion, LoneCenterIsZero) {
  const Descriptor d = onion(lone_center(), HandcraftedConfig{});
  ASSERT_EQ(d.values.size(), 3u);
  EXPECT_EQ(vals(d), (std::vector<double>{0, 0, 0}));
}

TEST(Onion, OneNeighborPerShell) {
  const Constellation c = with_neighbors({{2, 1}, {12, 2}, {25, 3}});
  const Descriptor d = onion(c, HandcraftedConfig{});
  EXPECT_EQ(vals(d), (std::vector<double>{1, 1, 1}));
}

TEST(Onion, BeyondLastShellIgnoredAndBoundariesHalfOpen) {
  HandcraftedConfig cfg;  // 3 shells x 10 m
  const Constellation c = with_neighbors({{9.999, 0}, {10.0, 0}, {29.999, 0}, {30.0, 0}});
  const Descriptor d = onion(c, cfg);
  // 9.999 -> shell 0; 10.0 -> shell 1 (half-open); 29.999 -> shell 2; 30.0 dropped.
  EXPECT_EQ(vals(d), (std::vector<double>{1, 1, 2}));
}

TEST(OnionHist, LoneCenterIsZeroVector) {
  const Descriptor d = onion_hist(lone_center(), HandcraftedConfig{}, 4);
  EXPECT_EQ(vals(d), std::vector<double>(12, 0.0));
}

TEST(OnionHist, ShellMajorFlatten) {
  const Constellation c = with_neighbors({{12, 2}});
  const Descriptor d = onion_hist(c, HandcraftedConfig{}, 4);
  ASSERT_EQ(d.values.size(), 12);
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    EXPECT_DOUBLE_EQ(d.values[i], i == 6 ? 1.0 : 0.0);  // shell 1, class 2 -> 1*4+2
}

TEST(OnionHist, PermutingMembersLeavesDescriptorUnchanged) {
  Constellation c = with_neighbors({{3, 1}, {14, 0}, {22, 3}, {7, 2}});
  const Descriptor d0 = onion_hist(c, HandcraftedConfig{}, 4);
  std::reverse(c.members.begin() + 1, c.members.end());
  const Descriptor d1 = onion_hist(c, HandcraftedConfig{}, 4);
  EXPECT_EQ(vals(d0), vals(d1));
}

TEST(OnionFamily, MatchesBruteForceOn200RandomConstellations) {
  std::mt19937_64 rng(71);
  HandcraftedConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const Constellation c = random_constellation(rng, 5);
    EXPECT_EQ(vals(onion(c, cfg)), onion_oracle(c, cfg));
    EXPECT_EQ(vals(onion_hist(c, cfg, 5)), onion_hist_oracle(c, cfg, 5));
    // Sum consistency: both descriptors count members within n_s * d_s.
    double s0 = 0, s1 = 0, expect = 0;
    for (const double v : onion(c, cfg).values) s0 += v;
    for (const double v : onion_hist(c, cfg, 5).values) s1 += v;
    for (const auto& o : c.members)
      if (o.instance_id != c.center.instance_id &&
          (o.position - c.origin).norm() < cfg.n_shells * cfg.shell_spacing)
        expect += 1;
    EXPECT_DOUBLE_EQ(s0, expect);
    EXPECT_DOUBLE_EQ(s1, expect);
  }
}

TEST(OnionFamily, RotationInvariantBitExact) {
  std::mt19937_64 rng(73);
  HandcraftedConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const Constellation c = random_constellation(rng, 5);
    const Constellation r = rotated(c, 0.9 + 0.05 * trial);
    EXPECT_EQ(vals(onion(c, cfg)), vals(onion(r, cfg)));
    EXPECT_EQ(vals(onion_hist(c, cfg, 5)), vals(onion_hist(r, cfg, 5)));
  }
}

TEST(RandomWalk, SingleNodeStaysOnSelfLoop) {
  Constellation c = lone_center();
  c.center.class_label = 2;
  c.members[0].class_label = 2;
  const Descriptor d = random_walk(graph_of(c, 10.0), HandcraftedConfig{}, 5);
  ASSERT_EQ(d.kind, DescriptorKind::walk_matrix);
  ASSERT_EQ(d.walks.rows(), 30);
  ASSERT_EQ(d.walks.cols(), 4);
  for (int r = 0; r < 30; ++r)
    for (int col = 0; col < 4; ++col) EXPECT_EQ(d.walks(r, col), 2);
}

TEST(RandomWalk, StarAlternatesBetweenTheTwoNodes) {
  // Center class 1 ("a"), single neighbor class 3 ("b"): the only walk
  // avoiding self-loops is b, a, b, a.
  Constellation c;
  c.center = {0, 1, Vec3(0, 0, 0)};
  c.origin = Vec3(0, 0, 0);
  c.members = {c.center, {1, 3, Vec3(2, 0, 0)}};
  const Descriptor d = random_walk(graph_of(c, 5.0), HandcraftedConfig{}, 9);
  for (int r = 0; r < d.walks.rows(); ++r) {
    EXPECT_EQ(d.walks(r, 0), 3);
    EXPECT_EQ(d.walks(r, 1), 1);
    EXPECT_EQ(d.walks(r, 2), 3);
    EXPECT_EQ(d.walks(r, 3), 1);
  }
}

TEST(RandomWalk, FixedSeedIsDeterministic) {
  std::mt19937_64 rng(79);
  const Constellation c = random_constellation(rng, 4);
  const ConstellationGraph g = graph_of(c, 25.0);
  const Descriptor a = random_walk(g, HandcraftedConfig{}, 1234);
  const Descriptor b = random_walk(g, HandcraftedConfig{}, 1234);
  EXPECT_TRUE((a.walks.array() == b.walks.array()).all());
  const Descriptor other = random_walk(g, HandcraftedConfig{}, 1235);
  EXPECT_FALSE((a.walks.array() == other.walks.array()).all());
}

TEST(RandomWalk, RowsAreValidWalksByReplay) {
  // Every consecutive pair of visited labels must be realizable along graph
  // adjacency starting from the center. Track the feasible node set per step.
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const Constellation c = random_constellation(rng, 4);
    const ConstellationGraph g = graph_of(c, 20.0);
    const Descriptor d = random_walk(g, HandcraftedConfig{}, 100 + trial);
    const auto adj = g.adjacency(true);
    for (int r = 0; r < d.walks.rows(); ++r) {
      std::set<int> feasible{g.center_index};
      for (int step = 0; step < d.walks.cols(); ++step) {
        std::set<int> next;
        for (const int u : feasible) {
          // Transition: neighbors excluding self unless isolated.
          std::vector<int> ns;
          for (const int v : adj[static_cast<std::size_t>(u)])
            if (v != u) ns.push_back(v);
          if (ns.empty()) ns.push_back(u);
          for (const int v : ns)
            if (g.nodes[static_cast<std::size_t>(v)].class_label == d.walks(r, step))
              next.insert(v);
        }
        ASSERT_FALSE(next.empty()) << "walk row has no graph realization";
        feasible.swap(next);
      }
    }
  }
}

TEST(GosVertex, SingleObjectHistogram) {
  ObjectMap q;
  q.n_classes = 5;
  q.objects = {{0, 3, Vec3(0, 0, 0)}};
  EXPECT_EQ(vals(gos_vertex(q)), (std::vector<double>{0, 0, 0, 1, 0}));
}

TEST(GosVertex, CountsDuplicateClasses) {
  ObjectMap q;
  q.n_classes = 3;
  q.objects = {{0, 1, Vec3(0, 0, 0)}, {1, 1, Vec3(4, 0, 0)}};
  EXPECT_EQ(vals(gos_vertex(q)), (std::vector<double>{0, 2, 0}));
}

TEST(GosVertex, DisjointUnionIsAdditive) {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(-10, 10);
  ObjectMap a, b, uni;
  a.n_classes = b.n_classes = uni.n_classes = 6;
  std::int64_t id = 0;
  for (int i = 0; i < 12; ++i) {
    const SemanticObject o{id++, static_cast<int>(rng() % 6), Vec3(u(rng), u(rng), 0)};
    a.objects.push_back(o);
    uni.objects.push_back(o);
  }
  for (int i = 0; i < 9; ++i) {
    const SemanticObject o{id++, static_cast<int>(rng() % 6), Vec3(u(rng) + 100, u(rng), 0)};
    b.objects.push_back(o);
    uni.objects.push_back(o);
  }
  const auto va = vals(gos_vertex(a)), vb = vals(gos_vertex(b)), vu = vals(gos_vertex(uni));
  for (std::size_t i = 0; i < vu.size(); ++i) EXPECT_DOUBLE_EQ(vu[i], va[i] + vb[i]);
}

TEST(GosGraph, EdgelessGraphIsZero) {
  Constellation c;
  c.center = {0, 1, Vec3(0, 0, 0)};
  c.origin = Vec3(0, 0, 0);
  c.members = {c.center, {1, 2, Vec3(50, 0, 0)}};
  const Descriptor d = gos_graph(graph_of(c, 1.0), HandcraftedConfig{}, 4);
  for (const double v : d.values) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(GosGraph, SingleEdgeLandsInItsPairAndDistanceBin) {
  Constellation c;
  c.center = {0, 2, Vec3(0, 0, 0)};
  c.origin = Vec3(0, 0, 0);
  c.members = {c.center, {1, 5, Vec3(3.2, 0, 0)}};
  HandcraftedConfig cfg;  // bin width 2, max 60 -> 30 bins
  const int n_classes = 8;
  const Descriptor d = gos_graph(graph_of(c, 10.0), cfg, n_classes);
  const int n_bins = 30;
  const long expect_index = gos_pair_index(2, 5, n_classes) * n_bins + 1;  // [2,4) is bin 1
  double total = 0;
  for (Eigen::Index i = 0; i < d.values.size(); ++i) {
    total += d.values[i];
    EXPECT_DOUBLE_EQ(d.values[i], static_cast<long>(i) == expect_index ? 1.0 : 0.0);
  }
  EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(GosGraph, EndpointOrderIrrelevant) {
  HandcraftedConfig cfg;
  const int n_classes = 8;
  Constellation c1, c2;
  c1.center = {0, 2, Vec3(0, 0, 0)};
  c1.origin = Vec3(0, 0, 0);
  c1.members = {c1.center, {1, 5, Vec3(3.2, 0, 0)}};
  // Same geometry with the classes swapped between the nodes.
  c2.center = {0, 5, Vec3(0, 0, 0)};
  c2.origin = Vec3(0, 0, 0);
  c2.members = {c2.center, {1, 2, Vec3(3.2, 0, 0)}};
  EXPECT_EQ(vals(gos_graph(graph_of(c1, 10.0), cfg, n_classes)),
            vals(gos_graph(graph_of(c2, 10.0), cfg, n_classes)));
}

TEST(GosGraph, MatchesBruteForceOnRandomGraphsAndCountsEdges) {
  std::mt19937_64 rng(97);
  HandcraftedConfig cfg;
  cfg.gos_distance_bin = 2.0;
  cfg.gos_max_distance = 60.0;
  const int n_classes = 5;
  const int n_bins = 30;
  for (int trial = 0; trial < 200; ++trial) {
    const Constellation c = random_constellation(rng, n_classes);
    const ConstellationGraph g = graph_of(c, 35.0);
    const Descriptor d = gos_graph(g, cfg, n_classes);

    // Oracle: iterate edges, bin by unordered class pair and distance.
    std::map<std::pair<std::pair<int, int>, int>, double> oracle;
    int edge_count = 0;
    for (const auto& e : g.edges) {
      if (e.i == e.j || e.distance >= cfg.gos_max_distance) continue;
      ++edge_count;
      int a = g.nodes[static_cast<std::size_t>(e.i)].class_label;
      int b = g.nodes[static_cast<std::size_t>(e.j)].class_label;
      if (a > b) std::swap(a, b);
      oracle[{{a, b}, static_cast<int>(e.distance / cfg.gos_distance_bin)}] += 1.0;
    }
    double total = 0;
    for (const auto& [key, cnt] : oracle) {
      const long idx = gos_pair_index(key.first.first, key.first.second, n_classes) * n_bins +
                       key.second;
      EXPECT_DOUBLE_EQ(d.values[idx], cnt);
    }
    for (const double v : d.values) total += v;
    EXPECT_DOUBLE_EQ(total, edge_count);
  }
}

TEST(GosFamily, RotationInvariantBitExact) {
  std::mt19937_64 rng(101);
  HandcraftedConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const Constellation c = random_constellation(rng, 5);
    const Constellation r = rotated(c, 0.31 + 0.07 * trial);
    ObjectMap mc, mr;
    mc.n_classes = mr.n_classes = 5;
    mc.objects = c.members;
    mr.objects = r.members;
    EXPECT_EQ(vals(gos_vertex(mc)), vals(gos_vertex(mr)));
    EXPECT_EQ(vals(gos_graph(graph_of(c, 25.0), cfg, 5)),
              vals(gos_graph(graph_of(r, 25.0), cfg, 5)));
  }
}

TEST(GosPairIndex, EnumeratesUnorderedPairsDensely) {
  // All pairs (a <= b) must map to distinct indices covering 0..n(n+1)/2-1.
  const int n = 6;
  std::set<long> seen;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const long idx = gos_pair_index(a, b, n);
      EXPECT_TRUE(seen.insert(idx).second);
      EXPECT_GE(idx, 0);
      EXPECT_LT(idx, n * (n + 1) / 2);
    }
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(n * (n + 1) / 2));
}

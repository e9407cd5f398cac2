#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "constell/eval.hpp"
#include "constell/extractor.hpp"
#include "constell/synth.hpp"

using namespace constell;

namespace {

PointRecord pt(double x, double y, double z, std::int64_t id, int cls) {
  return {x, y, z, id, cls};
}

LocalizationResult result_with(bool success, double err) {
  LocalizationResult r;
  r.success = success;
  r.translation_error = err;
  return r;
}

ObjectMap small_world(std::uint64_t seed) {
  WorldGenConfig cfg;
  cfg.n_patterns = {3, 3};
  cfg.nodes_per_pattern = {8, 10};
  cfg.n_classes = 6;
  cfg.pattern_offset_range = {-30.0, 30.0};
  cfg.seed = seed;
  return generate_world(cfg);
}

}  // namespace

TEST(Ingest, VoxelRepresentativesThenInstanceCentroid) {
  // Instance 1: three points in one voxel (mean (0.2, 0, 0)) and one point in
  // a second voxel, so the centroid averages the two representatives.
  IngestConfig cfg;
  cfg.voxel_size = 1.0;
  const std::vector<PointRecord> pts = {
      pt(0.0, 0.0, 0.0, 1, 2), pt(0.4, 0.0, 0.0, 1, 2), pt(0.2, 0.0, 0.0, 1, 2),
      pt(1.8, 0.0, 0.0, 1, 2),
  };
  const ObjectMap m = ingest_pointcloud(pts, cfg);
  ASSERT_EQ(m.objects.size(), 1u);
  EXPECT_NEAR(m.objects[0].position.x(), 1.0, 1e-12);
  EXPECT_NEAR(m.objects[0].position.y(), 0.0, 1e-12);
  EXPECT_NEAR(m.objects[0].position.z(), 0.0, 1e-12);
}

TEST(Ingest, DenseBallCentroidStaysNearTheTrueMean) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  IngestConfig cfg;
  cfg.voxel_size = 0.05;
  std::vector<PointRecord> pts;
  const Vec3 c(5.0, 5.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Vec3 d(u(rng), u(rng), u(rng));
    while (d.norm() > 1.0) d = Vec3(u(rng), u(rng), u(rng));
    const Vec3 p = c + 0.1 * d;
    pts.push_back(pt(p.x(), p.y(), p.z(), 7, 1));
  }
  const ObjectMap m = ingest_pointcloud(pts, cfg);
  ASSERT_EQ(m.objects.size(), 1u);
  EXPECT_LT((m.objects[0].position - c).norm(), 0.1);
}

TEST(Ingest, RemovedClassesDropWholeInstances) {
  IngestConfig cfg;
  cfg.removed_classes = {9};
  const std::vector<PointRecord> pts = {
      pt(0, 0, 0, 1, 9), pt(1, 0, 0, 1, 9),  // dynamic class: gone
      pt(5, 5, 0, 2, 3), pt(9, 9, 0, 3, 4),
  };
  const ObjectMap m = ingest_pointcloud(pts, cfg);
  ASSERT_EQ(m.objects.size(), 2u);
  EXPECT_EQ(m.find(1), nullptr);
  EXPECT_NE(m.find(2), nullptr);
  EXPECT_NE(m.find(3), nullptr);

  IngestConfig all_removed;
  all_removed.removed_classes = {9};
  EXPECT_THROW(ingest_pointcloud({pt(0, 0, 0, 1, 9)}, all_removed), DegenerateInput);
}

TEST(Ingest, MajorityVoteWithTiesToSmallerLabel) {
  IngestConfig cfg;
  const std::vector<PointRecord> pts = {
      // Instance 1: three votes for 2, one for 0.
      pt(0, 0, 0, 1, 2), pt(0.01, 0, 0, 1, 2), pt(0.02, 0, 0, 1, 2), pt(0.03, 0, 0, 1, 0),
      // Instance 2: tie between 1 and 3.
      pt(5, 0, 0, 2, 3), pt(5.01, 0, 0, 2, 3), pt(5.02, 0, 0, 2, 1), pt(5.03, 0, 0, 2, 1),
  };
  // Auto-densify: raw {1, 2} -> {0, 1}.
  const ObjectMap m = ingest_pointcloud(pts, cfg);
  ASSERT_EQ(m.objects.size(), 2u);
  EXPECT_EQ(m.find(1)->class_label, 1);  // raw 2
  EXPECT_EQ(m.find(2)->class_label, 0);  // raw 1 (tie winner)
  EXPECT_EQ(m.n_classes, 2);
}

TEST(Ingest, ExplicitRemapAndMissingEntry) {
  IngestConfig cfg;
  cfg.label_remap = {{10, 0}, {20, 1}, {30, 2}};
  const ObjectMap m =
      ingest_pointcloud({pt(0, 0, 0, 1, 10), pt(5, 0, 0, 2, 30)}, cfg);
  EXPECT_EQ(m.find(1)->class_label, 0);
  EXPECT_EQ(m.find(2)->class_label, 2);
  EXPECT_EQ(m.n_classes, 3);

  EXPECT_THROW(ingest_pointcloud({pt(0, 0, 0, 1, 99)}, cfg), ContractViolation);
}

TEST(Ingest, HintKeepsAlreadyDenseLabelsStable) {
  IngestConfig first;
  const std::vector<PointRecord> raw = {pt(0, 0, 0, 1, 7), pt(5, 0, 0, 2, 12)};
  const ObjectMap m1 = ingest_pointcloud(raw, first);
  EXPECT_EQ(m1.n_classes, 2);

  // Re-ingest the ingested map: labels are dense now; the hint keeps them.
  std::vector<PointRecord> again;
  for (const auto& o : m1.objects)
    again.push_back(pt(o.position.x(), o.position.y(), o.position.z(), o.instance_id,
                       o.class_label));
  IngestConfig second;
  second.n_classes_hint = m1.n_classes;
  const ObjectMap m2 = ingest_pointcloud(again, second);
  ASSERT_EQ(m2.objects.size(), m1.objects.size());
  for (const auto& o : m1.objects) EXPECT_EQ(m2.find(o.instance_id)->class_label, o.class_label);

  IngestConfig bad;
  bad.n_classes_hint = 1;  // label 1 falls outside
  EXPECT_THROW(ingest_pointcloud(again, bad), ContractViolation);
}

TEST(SampleQueries, GroundTruthMapsLocalBackToWorld) {
  const ObjectMap world = small_world(11);
  ScenarioConfig cfg = make_scenario(Scenario::SelfLocalization, 5);
  cfg.n_queries = 25;
  const auto queries = sample_queries(world, cfg, derive_seed(cfg.seed, "run", 0));
  ASSERT_EQ(queries.size(), 25u);
  int checked = 0;
  for (const auto& q : queries) {
    EXPECT_EQ(q.qlsm.frame_tag, FrameTag::local);
    for (const auto& o : q.qlsm.objects) {
      const SemanticObject* g = world.find(o.instance_id);
      ASSERT_NE(g, nullptr);
      EXPECT_LT((q.gt_pose.apply(o.position) - g->position).norm(), 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(SampleQueries, FewerObjectsIsNestedInSelfLocalization) {
  const ObjectMap world = small_world(12);
  ScenarioConfig self = make_scenario(Scenario::SelfLocalization, 9);
  ScenarioConfig fewer = make_scenario(Scenario::FewerObjects, 9);
  self.n_queries = fewer.n_queries = 40;
  const std::uint64_t run_seed = derive_seed(9, "run", 0);
  const auto qs = sample_queries(world, self, run_seed);
  const auto qf = sample_queries(world, fewer, run_seed);
  ASSERT_EQ(qs.size(), qf.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    EXPECT_DOUBLE_EQ(qs[i].gt_pose.x, qf[i].gt_pose.x);
    EXPECT_DOUBLE_EQ(qs[i].gt_pose.y, qf[i].gt_pose.y);
    EXPECT_DOUBLE_EQ(qs[i].gt_pose.yaw, qf[i].gt_pose.yaw);
    std::set<std::int64_t> in_self;
    for (const auto& o : qs[i].qlsm.objects) in_self.insert(o.instance_id);
    EXPECT_GE(qs[i].qlsm.objects.size(), qf[i].qlsm.objects.size());
    for (const auto& o : qf[i].qlsm.objects) EXPECT_TRUE(in_self.count(o.instance_id));
  }
}

TEST(SampleQueries, AddedNoiseDropoutThinsObjectsAtTheConfiguredRate) {
  const ObjectMap world = small_world(13);
  ScenarioConfig noisy = make_scenario(Scenario::AddedNoise, 21);
  ScenarioConfig clean = noisy;
  clean.noise_kinds.clear();
  noisy.n_queries = clean.n_queries = 500;
  const std::uint64_t run_seed = derive_seed(21, "run", 0);
  const auto qn = sample_queries(world, noisy, run_seed);
  const auto qc = sample_queries(world, clean, run_seed);
  ASSERT_EQ(qn.size(), qc.size());

  long kept = 0, total = 0;
  for (std::size_t i = 0; i < qn.size(); ++i) {
    kept += static_cast<long>(qn[i].qlsm.objects.size());
    total += static_cast<long>(qc[i].qlsm.objects.size());
  }
  ASSERT_GT(total, 1000);
  const double p = 1.0 - noisy.noise.e_dropout;
  const double sigma = std::sqrt(static_cast<double>(total) * p * (1.0 - p));
  EXPECT_NEAR(static_cast<double>(kept), p * static_cast<double>(total), 3.0 * sigma);
}

TEST(SampleQueries, RunSeedReproducesAndSeparates) {
  const ObjectMap world = small_world(14);
  ScenarioConfig cfg = make_scenario(Scenario::AddedNoise, 3);
  cfg.n_queries = 10;
  const auto a = sample_queries(world, cfg, 101);
  const auto b = sample_queries(world, cfg, 101);
  const auto c = sample_queries(world, cfg, 102);
  ASSERT_EQ(a.size(), b.size());
  bool any_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].qlsm.objects.size(), b[i].qlsm.objects.size());
    for (std::size_t k = 0; k < a[i].qlsm.objects.size(); ++k) {
      EXPECT_EQ(a[i].qlsm.objects[k].instance_id, b[i].qlsm.objects[k].instance_id);
      EXPECT_EQ((a[i].qlsm.objects[k].position - b[i].qlsm.objects[k].position).norm(), 0.0);
    }
    if (a[i].gt_pose.x != c[i].gt_pose.x || a[i].qlsm.objects.size() != c[i].qlsm.objects.size())
      any_differs = true;
  }
  EXPECT_TRUE(any_differs);
}

TEST(SampleQueries, OcclusionHidesObjectsBehindOthers) {
  ObjectMap world;
  world.n_classes = 3;
  world.objects = {{0, 0, Vec3(5, 0, 0)},
                   {1, 1, Vec3(10, 0, 0)},   // exactly behind object 0
                   {2, 2, Vec3(0, 8, 0)}};
  ScenarioConfig cfg = make_scenario(Scenario::SelfLocalization, 1);
  cfg.n_queries = 1;
  cfg.waypoints = {Vec3(0, 0, 0), Vec3(0, 0, 0)};

  const auto open = sample_queries(world, cfg, 0);
  ASSERT_EQ(open.size(), 1u);
  EXPECT_EQ(open[0].qlsm.objects.size(), 3u);

  cfg.occlusion = true;
  const auto shadowed = sample_queries(world, cfg, 0);
  ASSERT_EQ(shadowed.size(), 1u);
  std::set<std::int64_t> ids;
  for (const auto& o : shadowed[0].qlsm.objects) ids.insert(o.instance_id);
  EXPECT_TRUE(ids.count(0));
  EXPECT_FALSE(ids.count(1));
  EXPECT_TRUE(ids.count(2));
}

TEST(SuccessRate, CountsOnlySubMeterSuccesses) {
  const std::vector<LocalizationResult> rs = {
      result_with(true, 0.5), result_with(true, 1.5), result_with(true, 0.2),
      result_with(true, 2.0)};
  EXPECT_DOUBLE_EQ(success_rate(rs), 50.0);

  const std::vector<LocalizationResult> failures = {
      result_with(false, 0.1),  // failed geometric check: never counted
      LocalizationResult{},     // no ground truth: NaN error
  };
  EXPECT_DOUBLE_EQ(success_rate(failures), 0.0);
  EXPECT_THROW(success_rate({}), DegenerateInput);
}

TEST(SuccessRate, MonotoneInTheErrorThreshold) {
  const std::vector<LocalizationResult> rs = {
      result_with(true, 0.5), result_with(true, 1.5), result_with(true, 2.5),
      result_with(false, 0.0)};
  EXPECT_DOUBLE_EQ(success_rate(rs, 1.0), 25.0);
  EXPECT_DOUBLE_EQ(success_rate(rs, 2.0), 50.0);
  EXPECT_DOUBLE_EQ(success_rate(rs, 3.0), 75.0);
}

TEST(RunScenario, CellStatisticsMatchARecountFromTheRowSink) {
  const ObjectMap world = small_world(15);
  GraphConfig gcfg;
  gcfg = resolve_graph_config(gcfg, world);
  const auto extractor = make_extractor("onion_hist", HandcraftedConfig{}, world.n_classes, 0);
  const DescriptorDatabase gdb = extractor->extract(world, gcfg);

  ScenarioConfig cfg = make_scenario(Scenario::SelfLocalization, 31);
  cfg.n_queries = 20;
  cfg.n_runs = 3;
  MatchConfig mcfg;

  std::vector<std::vector<QueryRow>> rows(static_cast<std::size_t>(cfg.n_runs));
  const BenchCell cell =
      run_scenario(world, gdb, *extractor, cfg, gcfg, mcfg,
                   [&](int run, const QueryRow& row) {
                     rows[static_cast<std::size_t>(run)].push_back(row);
                   });

  EXPECT_EQ(cell.extractor, "onion_hist");
  EXPECT_EQ(cell.scenario, "SelfLocalization");
  ASSERT_EQ(cell.runs.size(), 3u);
  double eta_acc = 0.0;
  for (int run = 0; run < cfg.n_runs; ++run) {
    ASSERT_EQ(rows[static_cast<std::size_t>(run)].size(), 20u);
    int ok = 0;
    double t_compute = 0.0, t_match = 0.0;
    for (const auto& row : rows[static_cast<std::size_t>(run)]) {
      if (row.result.success && row.result.translation_error < 1.0) ++ok;
      t_compute += row.timing.t_compute_s;
      t_match += row.timing.t_match_s;
    }
    const RunSummary& rs = cell.runs[static_cast<std::size_t>(run)];
    EXPECT_EQ(rs.n_queries, 20);
    EXPECT_DOUBLE_EQ(rs.eta, 100.0 * ok / 20.0);
    EXPECT_DOUBLE_EQ(rs.t_compute_s, t_compute);
    EXPECT_DOUBLE_EQ(rs.t_match_s, t_match);
    eta_acc += rs.eta;
  }
  EXPECT_NEAR(cell.eta_mean, eta_acc / 3.0, 1e-12);

  double var = 0.0;
  for (const auto& rs : cell.runs) var += std::pow(rs.eta - cell.eta_mean, 2);
  EXPECT_NEAR(cell.eta_std, std::sqrt(var / 2.0), 1e-12);
  EXPECT_NEAR(cell.t_total_mean, cell.t_compute_mean + cell.t_match_mean, 1e-15);

  // A clean self-localization benchmark on an exact-descriptor extractor
  // should solve nearly every query.
  EXPECT_GE(cell.eta_mean, 90.0);
}

TEST(RunBenchmark, ProducesOneCellPerExtractorScenarioPair) {
  const ObjectMap world = small_world(16);
  GraphConfig gcfg;
  gcfg = resolve_graph_config(gcfg, world);
  const auto onion = make_extractor("onion", HandcraftedConfig{}, world.n_classes, 0);
  const auto hist = make_extractor("onion_hist", HandcraftedConfig{}, world.n_classes, 0);

  std::vector<ScenarioConfig> scenarios = {make_scenario(Scenario::SelfLocalization, 1),
                                           make_scenario(Scenario::FewerObjects, 1)};
  for (auto& s : scenarios) {
    s.n_queries = 5;
    s.n_runs = 2;
  }
  MatchConfig mcfg;
  long n_rows = 0;
  const BenchReport report =
      run_benchmark(world, {onion.get(), hist.get()}, scenarios, gcfg, mcfg,
                    [&](const std::string&, const std::string&, int, const QueryRow&) {
                      ++n_rows;
                    });
  ASSERT_EQ(report.cells.size(), 4u);
  EXPECT_EQ(report.cells[0].extractor, "onion");
  EXPECT_EQ(report.cells[0].scenario, "SelfLocalization");
  EXPECT_EQ(report.cells[1].extractor, "onion");
  EXPECT_EQ(report.cells[1].scenario, "FewerObjects");
  EXPECT_EQ(report.cells[2].extractor, "onion_hist");
  EXPECT_EQ(report.cells[3].extractor, "onion_hist");
  EXPECT_EQ(n_rows, 2 * 2 * 2 * 5);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "constell/core.hpp"
#include "constell/extractor.hpp"
#include "constell/localize.hpp"
#include "constell/synth.hpp"

namespace constell {

// ---------------------------------------------------------------------------
// Point-cloud ingestion
// ---------------------------------------------------------------------------

struct PointRecord {
  double x = 0, y = 0, z = 0;
  std::int64_t instance_id = 0;
  int class_id = 0;
};

/// voxel_size for downsampling; removed_classes are raw labels to drop
/// (dynamic/unknown categories); label_remap maps raw labels to dense ones.
/// With an empty remap, labels are densified in ascending raw order unless
/// n_classes_hint declares them dense already (ingestion idempotency).
struct IngestConfig {
  double voxel_size = 0.1;
  std::vector<int> removed_classes;
  std::map<int, int> label_remap;
  int n_classes_hint = 0;

  void validate() const {
    if (voxel_size <= 0.0) throw ContractViolation("IngestConfig: voxel_size must be > 0");
  }
};

inline ObjectMap ingest_pointcloud(const std::vector<PointRecord>& points,
                                   const IngestConfig& cfg) {
  cfg.validate();
  auto removed = [&](int cls) {
    return std::find(cfg.removed_classes.begin(), cfg.removed_classes.end(), cls) !=
           cfg.removed_classes.end();
  };

  // Voxel-downsample per instance: one representative (mean of contained
  // points) per occupied voxel, then the instance centroid over voxels.
  struct VoxelAcc {
    Vec3 sum = Vec3::Zero();
    long n = 0;
  };
  struct InstanceAcc {
    std::map<std::array<long, 3>, VoxelAcc> voxels;
    std::map<int, long> class_votes;
  };
  std::map<std::int64_t, InstanceAcc> instances;
  for (const auto& p : points) {
    if (removed(p.class_id)) continue;
    auto& inst = instances[p.instance_id];
    const std::array<long, 3> key = {static_cast<long>(std::floor(p.x / cfg.voxel_size)),
                                     static_cast<long>(std::floor(p.y / cfg.voxel_size)),
                                     static_cast<long>(std::floor(p.z / cfg.voxel_size))};
    auto& v = inst.voxels[key];
    v.sum += Vec3(p.x, p.y, p.z);
    v.n += 1;
    inst.class_votes[p.class_id] += 1;
  }
  if (instances.empty())
    throw DegenerateInput("ingest_pointcloud: no points left after class filtering");

  // Raw label per instance by majority vote (ties to the smaller label).
  std::map<std::int64_t, int> raw_label;
  std::vector<int> raw_labels_present;
  for (const auto& [id, acc] : instances) {
    int best = acc.class_votes.begin()->first;
    long best_n = acc.class_votes.begin()->second;
    for (const auto& [cls, n] : acc.class_votes)
      if (n > best_n) {
        best = cls;
        best_n = n;
      }
    raw_label[id] = best;
    raw_labels_present.push_back(best);
  }

  std::map<int, int> remap = cfg.label_remap;
  int n_classes;
  if (!remap.empty()) {
    n_classes = 0;
    for (const auto& [raw, dense] : remap) n_classes = std::max(n_classes, dense + 1);
  } else if (cfg.n_classes_hint > 0) {
    n_classes = cfg.n_classes_hint;  // labels declared dense already
    for (int c : raw_labels_present)
      if (c < 0 || c >= n_classes)
        throw ContractViolation("ingest_pointcloud: label outside declared n_classes");
  } else {
    std::sort(raw_labels_present.begin(), raw_labels_present.end());
    raw_labels_present.erase(
        std::unique(raw_labels_present.begin(), raw_labels_present.end()),
        raw_labels_present.end());
    for (std::size_t k = 0; k < raw_labels_present.size(); ++k)
      remap[raw_labels_present[k]] = static_cast<int>(k);
    n_classes = static_cast<int>(raw_labels_present.size());
  }

  ObjectMap map;
  map.n_classes = n_classes;
  map.frame_tag = FrameTag::global;
  for (const auto& [id, acc] : instances) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& [key, v] : acc.voxels) centroid += v.sum / static_cast<double>(v.n);
    centroid /= static_cast<double>(acc.voxels.size());
    int label = raw_label[id];
    if (!remap.empty()) {
      auto it = remap.find(label);
      if (it == remap.end())
        throw ContractViolation("ingest_pointcloud: no remap entry for raw label " +
                                std::to_string(label));
      label = it->second;
    }
    map.objects.push_back({id, label, centroid});
  }
  map.validate();
  return map;
}

// ---------------------------------------------------------------------------
// Scenarios and query sampling
// ---------------------------------------------------------------------------

enum class Scenario { SelfLocalization, FewerObjects, AddedNoise };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::SelfLocalization: return "SelfLocalization";
    case Scenario::FewerObjects: return "FewerObjects";
    case Scenario::AddedNoise: return "AddedNoise";
  }
  return "?";
}

inline Scenario scenario_from_name(const std::string& s) {
  for (Scenario sc :
       {Scenario::SelfLocalization, Scenario::FewerObjects, Scenario::AddedNoise})
    if (s == scenario_name(sc)) return sc;
  throw NotFoundError("unknown scenario '" + s + "'");
}

/// Benchmark scenario: query count, repeat count, visual range of the QLSM
/// side, optional query-side noise, and the sampling trajectory (piecewise
/// linear; empty waypoints = bounding-box diagonal).
struct ScenarioConfig {
  Scenario scenario = Scenario::SelfLocalization;
  double visual_range = 30.0;
  NoiseConfig noise;
  std::vector<NoiseKind> noise_kinds;  // applied to each QLSM (AddedNoise)
  int n_queries = 500;
  int n_runs = 5;
  std::uint64_t seed = 0;
  std::vector<Vec3> waypoints;
  bool occlusion = false;
  double occlusion_half_angle_deg = 2.0;

  void validate() const {
    if (n_queries < 1) throw ContractViolation("ScenarioConfig: n_queries must be >= 1");
    if (n_runs < 1) throw ContractViolation("ScenarioConfig: n_runs must be >= 1");
    if (visual_range <= 0.0) throw ContractViolation("ScenarioConfig: visual_range must be > 0");
  }
};

/// Presets: SelfLocalization = clean queries at 30 m range; FewerObjects =
/// clean queries at 20 m; AddedNoise = 30 m with uniform Trans in (0, 0.1),
/// Dropout 0.1, Misclass alpha 0.2, Scale in (0.9, 1.1).
inline ScenarioConfig make_scenario(Scenario s, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.scenario = s;
  cfg.seed = seed;
  switch (s) {
    case Scenario::SelfLocalization: break;
    case Scenario::FewerObjects: cfg.visual_range = 20.0; break;
    case Scenario::AddedNoise:
      cfg.noise_kinds = {NoiseKind::Trans, NoiseKind::Dropout, NoiseKind::Misclass,
                         NoiseKind::Scale};
      cfg.noise.trans_dist = TransDist::uniform;
      cfg.noise.e_trans_range = {0.0, 0.1};
      cfg.noise.e_dropout = 0.1;
      cfg.noise.alpha_misclass = 0.2;
      cfg.noise.scale_range = {0.9, 1.1};
      break;
  }
  return cfg;
}

struct Query {
  PoseSE2z gt_pose;  // QLSM frame -> world
  ObjectMap qlsm;    // local coordinates, frame_tag = local
};

namespace detail {

inline std::vector<Vec3> default_waypoints(const ObjectMap& map) {
  Vec3 lo = map.objects.front().position, hi = lo;
  for (const auto& o : map.objects) {
    lo = lo.cwiseMin(o.position);
    hi = hi.cwiseMax(o.position);
  }
  return {Vec3(lo.x(), lo.y(), 0.0), Vec3(hi.x(), hi.y(), 0.0)};
}

inline Vec3 point_on_polyline(const std::vector<Vec3>& wps, double t01) {
  double total = 0.0;
  for (std::size_t k = 1; k < wps.size(); ++k) total += (wps[k] - wps[k - 1]).norm();
  if (total <= 0.0) return wps.front();
  double target = t01 * total;
  for (std::size_t k = 1; k < wps.size(); ++k) {
    const double seg = (wps[k] - wps[k - 1]).norm();
    if (target <= seg || k + 1 == wps.size())
      return wps[k - 1] + (seg > 0.0 ? target / seg : 0.0) * (wps[k] - wps[k - 1]);
    target -= seg;
  }
  return wps.back();
}

// Coarse stand-in for hidden-point removal: an object is dropped when
// another centroid sits closer along nearly the same bearing.
inline bool occluded(const Vec3& query, const Vec3& obj, const std::vector<SemanticObject>& all,
                     double half_angle_rad) {
  const Vec3 d = obj - query;
  const double range = d.norm();
  if (range < 1e-9) return false;
  for (const auto& o : all) {
    const Vec3 e = o.position - query;
    const double r = e.norm();
    if (r < 1e-9 || r >= range || (o.position - obj).norm() < 1e-9) continue;
    const double cosang = std::clamp(d.dot(e) / (range * r), -1.0, 1.0);
    if (std::acos(cosang) < half_angle_rad) return true;
  }
  return false;
}

}  // namespace detail

/// Sample n_queries poses on the trajectory and carve out each QLSM: objects
/// within visual_range, expressed in a frame rotated by a random yaw and
/// centered on the query position. The stored ground truth maps QLSM
/// coordinates back to world. Scenario noise (if any) is applied afterwards
/// from an independent per-query stream, so the same run_seed yields nested
/// QLSMs across visual ranges.
inline std::vector<Query> sample_queries(const ObjectMap& map, const ScenarioConfig& cfg,
                                         std::uint64_t run_seed) {
  cfg.validate();
  if (map.objects.empty()) throw DegenerateInput("sample_queries: empty map");
  const std::vector<Vec3> wps = cfg.waypoints.empty() ? detail::default_waypoints(map)
                                                      : cfg.waypoints;
  std::vector<Query> out;
  out.reserve(static_cast<std::size_t>(cfg.n_queries));
  const double half_angle = cfg.occlusion_half_angle_deg * M_PI / 180.0;

  for (int qi = 0; qi < cfg.n_queries; ++qi) {
    auto pose_rng = make_rng(derive_seed(run_seed, "query-pose", static_cast<std::uint64_t>(qi)));
    const double t01 = std::uniform_real_distribution<double>(0.0, 1.0)(pose_rng);
    const double yaw = std::uniform_real_distribution<double>(-M_PI, M_PI)(pose_rng);
    const Vec3 qpos = detail::point_on_polyline(wps, t01);

    Query q;
    q.gt_pose = PoseSE2z(qpos.x(), qpos.y(), yaw);
    q.qlsm.n_classes = map.n_classes;
    q.qlsm.frame_tag = FrameTag::local;
    const PoseSE2z world_to_local = q.gt_pose.inverse();
    for (const auto& o : map.objects) {
      if ((o.position - qpos).norm() > cfg.visual_range) continue;
      if (cfg.occlusion && detail::occluded(qpos, o.position, map.objects, half_angle)) continue;
      q.qlsm.objects.push_back({o.instance_id, o.class_label, world_to_local.apply(o.position)});
    }
    if (!cfg.noise_kinds.empty() && !q.qlsm.objects.empty()) {
      auto noise_rng =
          make_rng(derive_seed(run_seed, "query-noise", static_cast<std::uint64_t>(qi)));
      q.qlsm = apply_map_noise(q.qlsm, cfg.noise_kinds, cfg.noise, noise_rng);
    }
    out.push_back(std::move(q));
  }
  return out;
}

/// eta = 100 * |{success and translation_error < 1 m}| / N.
inline double success_rate(const std::vector<LocalizationResult>& results,
                           double max_error_m = 1.0) {
  if (results.empty()) throw DegenerateInput("success_rate: no results");
  long ok = 0;
  for (const auto& r : results)
    if (r.success && std::isfinite(r.translation_error) && r.translation_error < max_error_m)
      ++ok;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct QueryRow {
  int query_id = 0;
  LocalizationResult result;
  LocalizeTiming timing;
};

struct RunSummary {
  double eta = 0.0;
  double t_compute_s = 0.0;  // summed over queries
  double t_match_s = 0.0;
  int n_queries = 0;
};

struct BenchCell {
  std::string extractor;
  std::string scenario;
  std::vector<RunSummary> runs;
  double eta_mean = 0.0, eta_std = 0.0;
  double t_compute_mean = 0.0, t_match_mean = 0.0, t_total_mean = 0.0;
};

struct BenchReport {
  std::vector<BenchCell> cells;
};

inline void finalize_cell(BenchCell& cell) {
  const double n = static_cast<double>(cell.runs.size());
  for (const auto& r : cell.runs) {
    cell.eta_mean += r.eta;
    cell.t_compute_mean += r.t_compute_s;
    cell.t_match_mean += r.t_match_s;
  }
  cell.eta_mean /= n;
  cell.t_compute_mean /= n;
  cell.t_match_mean /= n;
  cell.t_total_mean = cell.t_compute_mean + cell.t_match_mean;
  if (cell.runs.size() > 1) {
    double acc = 0.0;
    for (const auto& r : cell.runs) acc += (r.eta - cell.eta_mean) * (r.eta - cell.eta_mean);
    cell.eta_std = std::sqrt(acc / (n - 1.0));
  }
}

/// One benchmark cell: n_runs independent query samplings against a prebuilt
/// global database. row_sink (optional) receives every per-query record.
inline BenchCell run_scenario(const ObjectMap& global, const DescriptorDatabase& global_db,
                              const DescriptorExtractor& extractor, const ScenarioConfig& cfg,
                              const GraphConfig& gcfg, const MatchConfig& mcfg,
                              const std::function<void(int run, const QueryRow&)>& row_sink = {}) {
  cfg.validate();
  BenchCell cell;
  cell.extractor = extractor.name();
  cell.scenario = scenario_name(cfg.scenario);
  for (int run = 0; run < cfg.n_runs; ++run) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, "run", static_cast<std::uint64_t>(run));
    const auto queries = sample_queries(global, cfg, run_seed);
    RunSummary rs;
    rs.n_queries = static_cast<int>(queries.size());
    std::vector<LocalizationResult> results;
    results.reserve(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      MatchConfig qmcfg = mcfg;
      qmcfg.seed = derive_seed(run_seed, "ransac", static_cast<std::uint64_t>(qi));
      LocalizeTiming timing;
      LocalizationResult res;
      if (!queries[qi].qlsm.objects.empty())
        res = localize(queries[qi].qlsm, global, global_db, extractor, gcfg, qmcfg,
                       &queries[qi].gt_pose, &timing);
      results.push_back(res);
      rs.t_compute_s += timing.t_compute_s;
      rs.t_match_s += timing.t_match_s;
      if (row_sink) row_sink(run, QueryRow{static_cast<int>(qi), res, timing});
    }
    rs.eta = success_rate(results);
    cell.runs.push_back(rs);
  }
  finalize_cell(cell);
  return cell;
}

inline BenchReport run_benchmark(const ObjectMap& global,
                                 const std::vector<const DescriptorExtractor*>& extractors,
                                 const std::vector<ScenarioConfig>& scenarios,
                                 const GraphConfig& gcfg, const MatchConfig& mcfg,
                                 const std::function<void(const std::string& extractor,
                                                          const std::string& scenario, int run,
                                                          const QueryRow&)>& row_sink = {}) {
  BenchReport report;
  for (const DescriptorExtractor* ex : extractors) {
    const DescriptorDatabase gdb = ex->extract(global, gcfg);
    for (const auto& sc : scenarios) {
      auto sink = row_sink ? std::function<void(int, const QueryRow&)>(
                                 [&](int run, const QueryRow& row) {
                                   row_sink(ex->name(), scenario_name(sc.scenario), run, row);
                                 })
                           : std::function<void(int, const QueryRow&)>();
      report.cells.push_back(run_scenario(global, gdb, *ex, sc, gcfg, mcfg, sink));
    }
  }
  return report;
}

}  // namespace constell

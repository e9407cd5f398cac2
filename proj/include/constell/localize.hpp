#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "constell/core.hpp"
#include "constell/extractor.hpp"
#include "constell/rng.hpp"

namespace constell {

/// Matching parameters: K descriptor candidates per query object, minimum
/// inlier count t_ransac, 1 m inlier radius, 2000 iteration budget with
/// adaptive early exit.
struct MatchConfig {
  int K = 5;
  int t_ransac = 3;
  double inlier_radius = 1.0;
  int max_iterations = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    if (K < 1) throw ContractViolation("MatchConfig: K must be >= 1");
    if (t_ransac < 2) throw ContractViolation("MatchConfig: t_ransac must be >= 2");
    if (inlier_radius <= 0.0) throw ContractViolation("MatchConfig: inlier_radius must be > 0");
    if (max_iterations < 1) throw ContractViolation("MatchConfig: max_iterations must be >= 1");
  }
};

struct Match {
  std::int64_t query_id = 0;
  std::int64_t global_id = 0;
  double distance = 0.0;
};

/// For each query record, its K nearest global descriptors by the descriptor
/// distance, ties broken by global instance_id.
inline std::vector<Match> knn_candidates(const DescriptorDatabase& query_db,
                                         const DescriptorDatabase& global_db, int K) {
  if (K < 1) throw ContractViolation("knn_candidates: K must be >= 1");
  if (query_db.kind != global_db.kind)
    throw ContractViolation("knn_candidates: descriptor kind mismatch");
  if (!query_db.records.empty() && !global_db.records.empty() &&
      (query_db.rows != global_db.rows || query_db.cols != global_db.cols))
    throw ContractViolation("knn_candidates: descriptor dimension mismatch");

  std::vector<Match> out;
  const int k = std::min<int>(K, static_cast<int>(global_db.records.size()));
  std::vector<std::pair<double, std::int64_t>> d;
  d.reserve(global_db.records.size());
  for (const auto& q : query_db.records) {
    d.clear();
    for (const auto& g : global_db.records)
      d.emplace_back(descriptor_distance(q.desc, g.desc), g.instance_id);
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    for (int i = 0; i < k; ++i) out.push_back({q.instance_id, d[i].second, d[i].first});
  }
  return out;
}

struct Correspondence {
  Vec3 query_point = Vec3::Zero();
  Vec3 global_point = Vec3::Zero();
  std::int64_t query_id = -1;
  std::int64_t global_id = -1;
};

struct LocalizationResult {
  PoseSE2z pose;
  std::vector<std::pair<std::int64_t, std::int64_t>> inlier_pairs;
  bool success = false;
  double translation_error = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Planar rigid transform taking the query pair onto the global pair.
inline bool solve_two_point(const Correspondence& a, const Correspondence& b, PoseSE2z& out) {
  const double ux = b.query_point.x() - a.query_point.x();
  const double uy = b.query_point.y() - a.query_point.y();
  const double vx = b.global_point.x() - a.global_point.x();
  const double vy = b.global_point.y() - a.global_point.y();
  if (std::hypot(ux, uy) < 1e-9 || std::hypot(vx, vy) < 1e-9) return false;
  const double yaw = std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
  const double c = std::cos(yaw), s = std::sin(yaw);
  out = PoseSE2z(a.global_point.x() - (c * a.query_point.x() - s * a.query_point.y()),
                 a.global_point.y() - (s * a.query_point.x() + c * a.query_point.y()), yaw);
  return true;
}

// Closed-form planar least-squares rigid fit (Umeyama without scale).
inline bool fit_planar_rigid(const std::vector<Correspondence>& cs,
                             const std::vector<int>& subset, PoseSE2z& out) {
  if (subset.size() < 2) return false;
  double qcx = 0, qcy = 0, gcx = 0, gcy = 0;
  for (int i : subset) {
    qcx += cs[static_cast<std::size_t>(i)].query_point.x();
    qcy += cs[static_cast<std::size_t>(i)].query_point.y();
    gcx += cs[static_cast<std::size_t>(i)].global_point.x();
    gcy += cs[static_cast<std::size_t>(i)].global_point.y();
  }
  const double n = static_cast<double>(subset.size());
  qcx /= n; qcy /= n; gcx /= n; gcy /= n;
  double sin_acc = 0, cos_acc = 0;
  for (int i : subset) {
    const double qx = cs[static_cast<std::size_t>(i)].query_point.x() - qcx;
    const double qy = cs[static_cast<std::size_t>(i)].query_point.y() - qcy;
    const double gx = cs[static_cast<std::size_t>(i)].global_point.x() - gcx;
    const double gy = cs[static_cast<std::size_t>(i)].global_point.y() - gcy;
    sin_acc += qx * gy - qy * gx;
    cos_acc += qx * gx + qy * gy;
  }
  if (std::abs(sin_acc) < 1e-15 && std::abs(cos_acc) < 1e-15) return false;
  const double yaw = std::atan2(sin_acc, cos_acc);
  const double c = std::cos(yaw), s = std::sin(yaw);
  out = PoseSE2z(gcx - (c * qcx - s * qcy), gcy - (s * qcx + c * qcy), yaw);
  return true;
}

inline double xy_error(const PoseSE2z& T, const Correspondence& c) {
  const Vec3 p = T.apply(c.query_point);
  return std::hypot(p.x() - c.global_point.x(), p.y() - c.global_point.y());
}

inline std::vector<int> inliers_of(const PoseSE2z& T, const std::vector<Correspondence>& cs,
                                   double radius) {
  std::vector<int> in;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (xy_error(T, cs[i]) <= radius) in.push_back(static_cast<int>(i));
  return in;
}

// Content hash over the canonicalized correspondence list so the RANSAC
// stream is invariant to input ordering.
inline std::uint64_t correspondence_hash(const std::vector<Correspondence>& cs) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_double = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& c : cs) {
    h ^= static_cast<std::uint64_t>(c.query_id) + 0x9e3779b97f4a7c15ull;
    h *= 0x100000001b3ull;
    h ^= static_cast<std::uint64_t>(c.global_id) + 0x517cc1b727220a95ull;
    h *= 0x100000001b3ull;
    for (int k = 0; k < 3; ++k) mix_double(c.query_point[k]);
    for (int k = 0; k < 3; ++k) mix_double(c.global_point[k]);
  }
  return h;
}

}  // namespace detail

/// RANSAC over 2-point minimal samples with closed-form hypothesis and
/// refit. Deterministic for a given seed and correspondence *set* (the list
/// is canonicalized by sorting). success iff the best model explains at
/// least t_ransac correspondences within inlier_radius (xy distance).
inline LocalizationResult ransac_align(std::vector<Correspondence> cs, const MatchConfig& cfg) {
  cfg.validate();
  if (cs.size() < 2) throw DegenerateInput("ransac_align: need at least 2 correspondences");

  std::sort(cs.begin(), cs.end(), [](const Correspondence& a, const Correspondence& b) {
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    if (a.global_id != b.global_id) return a.global_id < b.global_id;
    for (int k = 0; k < 3; ++k) {
      if (a.query_point[k] != b.query_point[k]) return a.query_point[k] < b.query_point[k];
      if (a.global_point[k] != b.global_point[k]) return a.global_point[k] < b.global_point[k];
    }
    return false;
  });

  auto rng = make_rng(mix_u64(cfg.seed ^ detail::correspondence_hash(cs)));
  std::uniform_int_distribution<std::size_t> pick(0, cs.size() - 1);

  PoseSE2z best_pose;
  std::vector<int> best_inliers;
  bool have_model = false;
  const double log_no_confidence = std::log(1.0 - 0.999);
  long needed = cfg.max_iterations;

  for (long it = 0; it < cfg.max_iterations && it < needed; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (cs.size() > 1)
      while (j == i) j = pick(rng);
    PoseSE2z hyp;
    if (!detail::solve_two_point(cs[i], cs[j], hyp)) continue;
    std::vector<int> in = detail::inliers_of(hyp, cs, cfg.inlier_radius);
    if (!have_model || in.size() > best_inliers.size()) {
      have_model = true;
      best_pose = hyp;
      best_inliers = std::move(in);
      const double w =
          static_cast<double>(best_inliers.size()) / static_cast<double>(cs.size());
      if (w >= 1.0) {
        needed = it + 1;
      } else if (w > 0.0) {
        const double denom = std::log(1.0 - w * w);
        if (denom < 0.0)
          needed = std::min<long>(cfg.max_iterations,
                                  static_cast<long>(std::ceil(log_no_confidence / denom)));
      }
    }
  }

  LocalizationResult res;
  if (!have_model) return res;

  // Least-squares refit on the best inlier set; keep the hypothesis if the
  // refit loses support (rare, borderline inliers).
  PoseSE2z refit;
  if (detail::fit_planar_rigid(cs, best_inliers, refit)) {
    std::vector<int> in = detail::inliers_of(refit, cs, cfg.inlier_radius);
    if (in.size() >= best_inliers.size()) {
      best_pose = refit;
      best_inliers = std::move(in);
    }
  }

  res.pose = best_pose;
  for (int i : best_inliers)
    res.inlier_pairs.emplace_back(cs[static_cast<std::size_t>(i)].query_id,
                                  cs[static_cast<std::size_t>(i)].global_id);
  res.success = best_inliers.size() >= static_cast<std::size_t>(cfg.t_ransac);
  return res;
}

/// Expand descriptor matches to point correspondences using the two maps.
inline std::vector<Correspondence> matches_to_correspondences(const std::vector<Match>& ms,
                                                              const ObjectMap& qlsm,
                                                              const ObjectMap& global) {
  std::vector<Correspondence> cs;
  cs.reserve(ms.size());
  for (const auto& m : ms) {
    const SemanticObject* q = qlsm.find(m.query_id);
    const SemanticObject* g = global.find(m.global_id);
    if (!q || !g) throw NotFoundError("matches_to_correspondences: unknown instance id");
    cs.push_back({q->position, g->position, m.query_id, m.global_id});
  }
  return cs;
}

struct LocalizeTiming {
  double t_compute_s = 0.0;  // query descriptor extraction
  double t_match_s = 0.0;    // KNN + RANSAC
};

/// Full pipeline for one QLSM: extract query descriptors, match against the
/// prebuilt global database, and verify geometrically. The ground-truth pose
/// (QLSM frame -> world) fills translation_error when given.
inline LocalizationResult localize(const ObjectMap& qlsm, const ObjectMap& global,
                                   const DescriptorDatabase& global_db,
                                   const DescriptorExtractor& extractor, const GraphConfig& gcfg,
                                   const MatchConfig& cfg, const PoseSE2z* ground_truth = nullptr,
                                   LocalizeTiming* timing = nullptr) {
  if (qlsm.objects.empty() || global.objects.empty())
    throw DegenerateInput("localize: empty map");
  const auto t0 = std::chrono::steady_clock::now();
  const DescriptorDatabase qdb = extractor.extract(qlsm, gcfg);
  const auto t1 = std::chrono::steady_clock::now();
  if (qdb.kind != global_db.kind || qdb.rows != global_db.rows || qdb.cols != global_db.cols)
    throw ContractViolation("localize: query/global descriptor layout mismatch");

  LocalizationResult res;
  const auto ms = knn_candidates(qdb, global_db, cfg.K);
  auto cs = matches_to_correspondences(ms, qlsm, global);
  if (cs.size() >= 2) res = ransac_align(std::move(cs), cfg);
  const auto t2 = std::chrono::steady_clock::now();

  if (ground_truth && res.success)
    res.translation_error =
        std::hypot(res.pose.x - ground_truth->x, res.pose.y - ground_truth->y);
  if (timing) {
    timing->t_compute_s = std::chrono::duration<double>(t1 - t0).count();
    timing->t_match_s = std::chrono::duration<double>(t2 - t1).count();
  }
  return res;
}

inline LocalizationResult localize(const ObjectMap& qlsm, const ObjectMap& global,
                                   const DescriptorExtractor& extractor, const GraphConfig& gcfg,
                                   const MatchConfig& cfg, const PoseSE2z* ground_truth = nullptr,
                                   LocalizeTiming* timing = nullptr) {
  const DescriptorDatabase gdb = extractor.extract(global, gcfg);
  return localize(qlsm, global, gdb, extractor, gcfg, cfg, ground_truth, timing);
}

}  // namespace constell

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "constell/core.hpp"
#include "constell/graph.hpp"
#include "constell/rng.hpp"

namespace constell {

struct IntRange {
  int lo = 0, hi = 0;  // inclusive
};
struct RealRange {
  double lo = 0.0, hi = 0.0;
};

inline int sample_int(std::mt19937_64& rng, const IntRange& r) {
  return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}
inline double sample_real(std::mt19937_64& rng, const RealRange& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

enum class PatternKind { line, circle, gaussian };

/// Procedural world generation: a map is a superposition of randomly
/// placed geometric patterns (lines, circles, 2-D gaussian clusters) with
/// uniformly sampled class labels. Worlds are planar (z = 0).
struct WorldGenConfig {
  IntRange n_patterns{3, 8};
  IntRange nodes_per_pattern{4, 15};
  int n_classes = 20;
  std::vector<PatternKind> pattern_kinds{PatternKind::line, PatternKind::circle,
                                         PatternKind::gaussian};
  RealRange pattern_offset_range{-50.0, 50.0};
  RealRange line_length_range{5.0, 30.0};
  RealRange circle_radius_range{2.0, 15.0};
  RealRange gaussian_sigma_range{1.0, 8.0};
  std::uint64_t seed = 0;
};

inline ObjectMap generate_world(const WorldGenConfig& cfg) {
  if (cfg.n_classes < 2) throw ContractViolation("WorldGenConfig: n_classes must be >= 2");
  if (cfg.pattern_kinds.empty())
    throw ContractViolation("WorldGenConfig: pattern_kinds must be non-empty");
  auto rng = make_rng(derive_seed(cfg.seed, "world-gen"));

  ObjectMap map;
  map.n_classes = cfg.n_classes;
  std::int64_t next_id = 0;
  const int n_patterns = sample_int(rng, cfg.n_patterns);
  std::uniform_int_distribution<int> class_dist(0, cfg.n_classes - 1);
  std::uniform_int_distribution<std::size_t> kind_dist(0, cfg.pattern_kinds.size() - 1);

  for (int p = 0; p < n_patterns; ++p) {
    const PatternKind kind = cfg.pattern_kinds[kind_dist(rng)];
    const int n_nodes = sample_int(rng, cfg.nodes_per_pattern);
    const double ox = sample_real(rng, cfg.pattern_offset_range);
    const double oy = sample_real(rng, cfg.pattern_offset_range);

    switch (kind) {
      case PatternKind::line: {
        const double theta = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
        const double len = sample_real(rng, cfg.line_length_range);
        const double dx = std::cos(theta), dy = std::sin(theta);
        for (int i = 0; i < n_nodes; ++i) {
          const double t = std::uniform_real_distribution<double>(-len / 2, len / 2)(rng);
          map.objects.push_back(
              {next_id++, class_dist(rng), Vec3(ox + t * dx, oy + t * dy, 0.0)});
        }
        break;
      }
      case PatternKind::circle: {
        const double r = sample_real(rng, cfg.circle_radius_range);
        for (int i = 0; i < n_nodes; ++i) {
          const double phi = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
          map.objects.push_back(
              {next_id++, class_dist(rng),
               Vec3(ox + r * std::cos(phi), oy + r * std::sin(phi), 0.0)});
        }
        break;
      }
      case PatternKind::gaussian: {
        const double sigma = sample_real(rng, cfg.gaussian_sigma_range);
        std::normal_distribution<double> n(0.0, sigma);
        for (int i = 0; i < n_nodes; ++i)
          map.objects.push_back({next_id++, class_dist(rng), Vec3(ox + n(rng), oy + n(rng), 0.0)});
        break;
      }
    }
  }
  return map;
}

/// Generate worlds on a 1 km grid until the merged map holds at least
/// min_objects, reassigning instance ids sequentially. Tiling keeps the
/// per-world constellations untouched while yielding one map file.
inline ObjectMap generate_training_map(const WorldGenConfig& cfg, int min_objects) {
  ObjectMap merged;
  merged.n_classes = cfg.n_classes;
  std::int64_t next_id = 0;
  int tile = 0;
  const double pitch = 1000.0;
  while (static_cast<int>(merged.objects.size()) < min_objects) {
    WorldGenConfig wc = cfg;
    wc.seed = derive_seed(cfg.seed, "tile", static_cast<std::uint64_t>(tile));
    ObjectMap world = generate_world(wc);
    const Vec3 offset((tile % 100) * pitch, (tile / 100) * pitch, 0.0);
    for (auto& o : world.objects)
      merged.objects.push_back({next_id++, o.class_label, o.position + offset});
    ++tile;
  }
  return merged;
}

// ---------------------------------------------------------------------------
// Noise models
// ---------------------------------------------------------------------------

enum class NoiseKind { Trans, Orient, Dropout, FP, Misclass, Crop, Scale };

inline const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Trans: return "Trans";
    case NoiseKind::Orient: return "Orient";
    case NoiseKind::Dropout: return "Dropout";
    case NoiseKind::FP: return "FP";
    case NoiseKind::Misclass: return "Misclass";
    case NoiseKind::Crop: return "Crop";
    case NoiseKind::Scale: return "Scale";
  }
  return "?";
}

inline NoiseKind noise_kind_from_name(const std::string& s) {
  for (NoiseKind k : {NoiseKind::Trans, NoiseKind::Orient, NoiseKind::Dropout, NoiseKind::FP,
                      NoiseKind::Misclass, NoiseKind::Crop, NoiseKind::Scale})
    if (s == noise_kind_name(k)) return k;
  throw NotFoundError("unknown noise kind '" + s + "'");
}

enum class TransDist { normal, uniform };

/// Noise parameters. Training defaults follow the simulated-data recipe:
/// e_trans ~ N(0, 0.25), rotation ~ U(-180deg, 180deg), e_dropout = 0.1,
/// e_fp = 0.1, alpha_misclass = 0.1, e_crop ~ U(0, 0.3), s ~ U(0.85, 1.25).
/// The uniform trans variant (e_trans ~ U(lo, hi)) serves the evaluation
/// scenarios.
struct NoiseConfig {
  TransDist trans_dist = TransDist::normal;
  double e_trans_sigma = 0.5;  // stddev; N(0, 0.25) means variance 0.25
  RealRange e_trans_range{0.0, 0.1};
  RealRange orient_range{-M_PI, M_PI};
  double e_dropout = 0.1;
  double e_fp = 0.1;
  double alpha_misclass = 0.1;
  double e_crop_max = 0.3;
  RealRange scale_range{0.85, 1.25};

  void validate() const {
    for (double p : {e_dropout, e_fp, alpha_misclass})
      if (p < 0.0 || p > 1.0) throw ContractViolation("NoiseConfig: probability out of [0,1]");
    if (scale_range.lo <= 0.0) throw ContractViolation("NoiseConfig: scale_range must be positive");
    if (e_crop_max < 0.0 || e_crop_max > 1.0)
      throw ContractViolation("NoiseConfig: e_crop_max out of [0,1]");
  }
};

namespace detail {

// Noise operates on positions relative to the constellation origin. The
// center sits at the origin, so Trans/Misclass/Crop leave it alone by
// construction and Dropout skips it explicitly.
inline void noise_once(std::vector<SemanticObject>& members, std::int64_t center_id,
                       NoiseKind kind, const NoiseConfig& cfg, int n_classes, const Vec3& origin,
                       std::mt19937_64& rng) {
  auto rel = [&](const SemanticObject& o) { return Vec3(o.position - origin); };
  auto max_norm = [&]() {
    double m = 0.0;
    for (const auto& o : members) m = std::max(m, rel(o).norm());
    return m;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  switch (kind) {
    case NoiseKind::Trans: {
      for (auto& o : members) {
        const double norm = rel(o).norm();
        for (int axis = 0; axis < 3; ++axis) {
          const double e = cfg.trans_dist == TransDist::normal
                               ? std::normal_distribution<double>(0.0, cfg.e_trans_sigma)(rng)
                               : sample_real(rng, cfg.e_trans_range);
          o.position[axis] += norm * e;
        }
      }
      break;
    }
    case NoiseKind::Orient: {
      const double r = sample_real(rng, cfg.orient_range);
      const double c = std::cos(r), s = std::sin(r);
      for (auto& o : members) {
        const Vec3 p = rel(o);
        o.position = origin + Vec3(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
      }
      break;
    }
    case NoiseKind::Dropout: {
      std::vector<SemanticObject> kept;
      kept.reserve(members.size());
      for (const auto& o : members) {
        if (o.instance_id == center_id || unit(rng) >= cfg.e_dropout) kept.push_back(o);
      }
      members.swap(kept);
      break;
    }
    case NoiseKind::FP: {
      if (unit(rng) < cfg.e_fp) {
        const double radius = max_norm();
        // Uniform in the bounding sphere of the constellation.
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        if (dir.norm() < 1e-12) dir = Vec3(1, 0, 0);
        dir.normalize();
        const double r = radius * std::cbrt(unit(rng));
        std::int64_t id = 0;
        for (const auto& o : members) id = std::max(id, o.instance_id);
        members.push_back({id + 1, std::uniform_int_distribution<int>(0, n_classes - 1)(rng),
                           origin + r * dir});
      }
      break;
    }
    case NoiseKind::Misclass: {
      const double mx = max_norm();
      for (auto& o : members) {
        const double e = mx > 0.0 ? rel(o).norm() / mx * cfg.alpha_misclass : 0.0;
        if (unit(rng) < e && n_classes > 1) {
          // Draw a different label so the flip frequency is exactly e.
          int lbl = std::uniform_int_distribution<int>(0, n_classes - 2)(rng);
          if (lbl >= o.class_label) ++lbl;
          o.class_label = lbl;
        }
      }
      break;
    }
    case NoiseKind::Crop: {
      const double e_crop = std::uniform_real_distribution<double>(0.0, cfg.e_crop_max)(rng);
      const int axis = std::uniform_int_distribution<int>(0, 1)(rng);  // x or y
      const double cutoff = max_norm() * (1.0 - e_crop);
      std::vector<SemanticObject> kept;
      kept.reserve(members.size());
      for (const auto& o : members)
        if (!(rel(o)[axis] > cutoff)) kept.push_back(o);
      members.swap(kept);
      break;
    }
    case NoiseKind::Scale: {
      const double s = sample_real(rng, cfg.scale_range);
      for (auto& o : members) o.position = origin + s * rel(o);
      break;
    }
  }
}

}  // namespace detail

/// Apply a sequence of augmentations with one RNG stream; positions are
/// interpreted relative to the constellation origin.
inline Constellation apply_noise_kinds(const Constellation& c, const std::vector<NoiseKind>& kinds,
                                       const NoiseConfig& cfg, int n_classes, std::mt19937_64& rng) {
  Constellation out = c;
  for (NoiseKind k : kinds)
    detail::noise_once(out.members, out.center.instance_id, k, cfg, n_classes, out.origin, rng);
  return out;
}

inline Constellation apply_noise(const Constellation& c, NoiseKind kind, const NoiseConfig& cfg,
                                 int n_classes, std::uint64_t rng_seed) {
  auto rng = make_rng(rng_seed);
  return apply_noise_kinds(c, {kind}, cfg, n_classes, rng);
}

/// Noise over a local map (e.g. a QLSM in sensor coordinates): same models,
/// origin at the frame origin, no protected center object.
inline ObjectMap apply_map_noise(const ObjectMap& local_map, const std::vector<NoiseKind>& kinds,
                                 const NoiseConfig& cfg, std::mt19937_64& rng) {
  ObjectMap out = local_map;
  for (NoiseKind k : kinds)
    detail::noise_once(out.objects, /*center_id=*/-1, k, cfg, out.n_classes, Vec3::Zero(), rng);
  return out;
}

// ---------------------------------------------------------------------------
// Triplet dataset
// ---------------------------------------------------------------------------

struct PositiveMeta {
  std::vector<NoiseKind> kinds;
  std::uint64_t seed = 0;
};

/// Anchor constellations with noisy positive variants. The label of every
/// sample is its anchor index.
struct TripletDataset {
  std::vector<Constellation> anchors;
  std::vector<std::vector<Constellation>> positives;  // per anchor
  std::vector<std::vector<PositiveMeta>> meta;        // aligned with positives

  std::size_t size() const {
    std::size_t n = anchors.size();
    for (const auto& p : positives) n += p.size();
    return n;
  }

  /// Flattened (constellation, label) view: anchor first, then its positives.
  std::vector<std::pair<const Constellation*, int>> flatten() const {
    std::vector<std::pair<const Constellation*, int>> out;
    out.reserve(size());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      out.emplace_back(&anchors[a], static_cast<int>(a));
      for (const auto& p : positives[a]) out.emplace_back(&p, static_cast<int>(a));
    }
    return out;
  }
};

/// Sample the augmentation subset for one positive: Orient always (it is
/// what makes positives distinct viewpoints), every other noise kind
/// independently with probability 0.5.
inline std::vector<NoiseKind> sample_noise_kinds(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NoiseKind> kinds;
  for (NoiseKind k : {NoiseKind::Trans, NoiseKind::Orient, NoiseKind::Dropout, NoiseKind::FP,
                      NoiseKind::Misclass, NoiseKind::Crop, NoiseKind::Scale}) {
    if (k == NoiseKind::Orient || unit(rng) < 0.5) kinds.push_back(k);
  }
  return kinds;
}

/// Build anchors from map objects (ordered by instance id) and n_positives
/// noisy variants per anchor. n_anchors = 0 takes every object.
inline TripletDataset make_triplet_dataset(const ObjectMap& map, const NoiseConfig& cfg,
                                           int n_positives, std::uint64_t seed,
                                           double visual_range = 30.0, int n_anchors = 0) {
  if (map.objects.empty()) throw DegenerateInput("make_triplet_dataset: empty map");
  cfg.validate();

  std::vector<std::int64_t> ids;
  for (const auto& o : map.objects) ids.push_back(o.instance_id);
  std::sort(ids.begin(), ids.end());
  if (n_anchors > 0 && n_anchors < static_cast<int>(ids.size()))
    ids.resize(static_cast<std::size_t>(n_anchors));

  TripletDataset ds;
  ds.anchors.reserve(ids.size());
  ds.positives.resize(ids.size());
  ds.meta.resize(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a) {
    ds.anchors.push_back(extract_constellation(map, ids[a], visual_range));
    for (int v = 1; v <= n_positives; ++v) {
      const std::uint64_t sample_seed =
          derive_seed(seed, "positive", a * 1000003ull + static_cast<std::uint64_t>(v));
      auto rng = make_rng(sample_seed);
      const auto kinds = sample_noise_kinds(rng);
      ds.positives[a].push_back(
          apply_noise_kinds(ds.anchors[a], kinds, cfg, map.n_classes, rng));
      ds.meta[a].push_back({kinds, sample_seed});
    }
  }
  return ds;
}

}  // namespace constell

#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "constell/core.hpp"
#include "constell/gnn.hpp"
#include "constell/graph.hpp"
#include "constell/handcrafted.hpp"
#include "constell/rng.hpp"

namespace constell {

struct DescriptorRecord {
  std::int64_t instance_id = 0;
  Descriptor desc;
};

/// One descriptor per map object, sorted by instance_id. config_hash ties a
/// database to the extractor settings that produced it.
struct DescriptorDatabase {
  DescriptorKind kind = DescriptorKind::vector;
  long rows = 0;  // walk_matrix: n_walks; vector: 1
  long cols = 0;  // walk_matrix: walk_length; vector: payload length
  std::string config_hash;
  std::vector<DescriptorRecord> records;

  const DescriptorRecord* find(std::int64_t instance_id) const {
    for (const auto& r : records)
      if (r.instance_id == instance_id) return &r;
    return nullptr;
  }
};

/// Maps every object of a map to a descriptor. Extraction requires a
/// resolved GraphConfig (explicit edge threshold) so query and global sides
/// share the same graph construction.
class DescriptorExtractor {
 public:
  virtual ~DescriptorExtractor() = default;
  virtual std::string name() const = 0;
  virtual DescriptorKind kind() const = 0;
  virtual std::string config_hash() const = 0;
  virtual Descriptor extract_one(const ObjectMap& map, std::int64_t center_id,
                                 const GraphConfig& cfg) const = 0;

  DescriptorDatabase extract(const ObjectMap& map, const GraphConfig& cfg) const {
    if (cfg.threshold_mode != GraphConfig::ThresholdMode::explicit_value)
      throw ContractViolation("DescriptorExtractor: resolve the GraphConfig first");
    map.validate();
    std::vector<std::int64_t> ids;
    ids.reserve(map.objects.size());
    for (const auto& o : map.objects) ids.push_back(o.instance_id);
    std::sort(ids.begin(), ids.end());

    DescriptorDatabase db;
    db.kind = kind();
    db.config_hash = config_hash();
    for (std::int64_t id : ids) {
      DescriptorRecord rec;
      rec.instance_id = id;
      rec.desc = extract_one(map, id, cfg);
      if (db.records.empty()) {
        if (rec.desc.kind == DescriptorKind::vector) {
          db.rows = 1;
          db.cols = rec.desc.values.size();
        } else {
          db.rows = rec.desc.walks.rows();
          db.cols = rec.desc.walks.cols();
        }
      }
      db.records.push_back(std::move(rec));
    }
    return db;
  }
};

namespace detail {

inline std::string hash_hex(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return std::string(buf);
}

}  // namespace detail

class OnionExtractor final : public DescriptorExtractor {
 public:
  explicit OnionExtractor(HandcraftedConfig cfg) : cfg_(cfg) {}
  std::string name() const override { return "onion"; }
  DescriptorKind kind() const override { return DescriptorKind::vector; }
  std::string config_hash() const override {
    return detail::hash_hex("onion:" + std::to_string(cfg_.n_shells) + ":" +
                            std::to_string(cfg_.shell_spacing));
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    return onion(extract_constellation(map, id, cfg.visual_range), cfg_);
  }

 private:
  HandcraftedConfig cfg_;
};

class OnionHistExtractor final : public DescriptorExtractor {
 public:
  OnionHistExtractor(HandcraftedConfig cfg, int n_classes) : cfg_(cfg), n_classes_(n_classes) {}
  std::string name() const override { return "onion_hist"; }
  DescriptorKind kind() const override { return DescriptorKind::vector; }
  std::string config_hash() const override {
    return detail::hash_hex("onion_hist:" + std::to_string(cfg_.n_shells) + ":" +
                            std::to_string(cfg_.shell_spacing) + ":" +
                            std::to_string(n_classes_));
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    return onion_hist(extract_constellation(map, id, cfg.visual_range), cfg_, n_classes_);
  }

 private:
  HandcraftedConfig cfg_;
  int n_classes_;
};

class RandomWalkExtractor final : public DescriptorExtractor {
 public:
  RandomWalkExtractor(HandcraftedConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}
  std::string name() const override { return "random_walk"; }
  DescriptorKind kind() const override { return DescriptorKind::walk_matrix; }
  std::string config_hash() const override {
    return detail::hash_hex("random_walk:" + std::to_string(cfg_.n_walks) + ":" +
                            std::to_string(cfg_.walk_length));
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    const auto g = build_graph(extract_constellation(map, id, cfg.visual_range), cfg);
    return random_walk(g, cfg_, derive_seed(seed_, "walk", static_cast<std::uint64_t>(id)));
  }

 private:
  HandcraftedConfig cfg_;
  std::uint64_t seed_;
};

/// GOS descriptors are defined over a whole map: on a QLSM (frame_tag local)
/// every object carries the map-level descriptor; on the global map each
/// object's "submap" is its own constellation.
class GosVertexExtractor final : public DescriptorExtractor {
 public:
  explicit GosVertexExtractor(int n_classes) : n_classes_(n_classes) {}
  std::string name() const override { return "gosv"; }
  DescriptorKind kind() const override { return DescriptorKind::vector; }
  std::string config_hash() const override {
    return detail::hash_hex("gosv:" + std::to_string(n_classes_));
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    if (map.frame_tag == FrameTag::local) {
      ObjectMap m = map;
      m.n_classes = n_classes_;
      return gos_vertex(m);
    }
    const Constellation c = extract_constellation(map, id, cfg.visual_range);
    ObjectMap sub;
    sub.objects = c.members;
    sub.n_classes = n_classes_;
    sub.frame_tag = FrameTag::local;
    return gos_vertex(sub);
  }

 private:
  int n_classes_;
};

class GosGraphExtractor final : public DescriptorExtractor {
 public:
  GosGraphExtractor(HandcraftedConfig cfg, int n_classes) : cfg_(cfg), n_classes_(n_classes) {}
  std::string name() const override { return "gosg"; }
  DescriptorKind kind() const override { return DescriptorKind::vector; }
  std::string config_hash() const override {
    return detail::hash_hex("gosg:" + std::to_string(cfg_.gos_distance_bin) + ":" +
                            std::to_string(cfg_.gos_max_distance) + ":" +
                            std::to_string(n_classes_));
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    if (map.frame_tag == FrameTag::local)
      return gos_graph(graph_over_map(map, cfg), cfg_, n_classes_);
    const Constellation c = extract_constellation(map, id, cfg.visual_range);
    return gos_graph(build_graph(c, cfg), cfg_, n_classes_);
  }

 private:
  HandcraftedConfig cfg_;
  int n_classes_;
};

class GnnExtractor final : public DescriptorExtractor {
 public:
  explicit GnnExtractor(GnnModel model) : model_(std::move(model)) {}
  std::string name() const override { return "gnn"; }
  DescriptorKind kind() const override { return DescriptorKind::vector; }
  std::string config_hash() const override {
    std::string s = "gnn:" + std::string(input_encoding_name(model_.cfg.input_encoding)) + ":" +
                    std::to_string(model_.cfg.n_layers) + ":" +
                    std::to_string(model_.cfg.hidden_dim) + ":" +
                    std::to_string(model_.cfg.descriptor_dim) + ":" +
                    std::to_string(model_.n_scalars());
    return detail::hash_hex(s);
  }
  Descriptor extract_one(const ObjectMap& map, std::int64_t id,
                         const GraphConfig& cfg) const override {
    const auto g = build_graph(extract_constellation(map, id, cfg.visual_range), cfg);
    return gnn_forward(g, model_);
  }
  const GnnModel& model() const { return model_; }

 private:
  GnnModel model_;
};

inline std::vector<std::string> extractor_names() {
  return {"onion", "onion_hist", "random_walk", "gosv", "gosg", "gnn"};
}

/// Factory for the handcrafted extractors; the learned one needs a model, use
/// GnnExtractor directly.
inline std::unique_ptr<DescriptorExtractor> make_extractor(const std::string& name,
                                                           const HandcraftedConfig& hcfg,
                                                           int n_classes, std::uint64_t seed) {
  if (name == "onion") return std::make_unique<OnionExtractor>(hcfg);
  if (name == "onion_hist") return std::make_unique<OnionHistExtractor>(hcfg, n_classes);
  if (name == "random_walk") return std::make_unique<RandomWalkExtractor>(hcfg, seed);
  if (name == "gosv") return std::make_unique<GosVertexExtractor>(n_classes);
  if (name == "gosg") return std::make_unique<GosGraphExtractor>(hcfg, n_classes);
  std::string valid;
  for (const auto& n : extractor_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw NotFoundError("unknown extractor '" + name + "' (valid: " + valid + ")");
}

}  // namespace constell

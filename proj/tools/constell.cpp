// Command-line front-end: gen / ingest / extract / train / localize / eval.
// Every command snapshots its config and seeds into a run manifest next to
// the outputs and tags produced artifacts with the manifest name.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "constell/config.hpp"
#include "constell/core.hpp"
#include "constell/eval.hpp"
#include "constell/extractor.hpp"
#include "constell/gnn.hpp"
#include "constell/graph.hpp"
#include "constell/io.hpp"
#include "constell/localize.hpp"
#include "constell/synth.hpp"
#include "constell/train.hpp"

namespace fs = std::filesystem;
using namespace constell;

namespace {

constexpr const char* kVersion = "constell 1.0.0";

// ---- config section loaders ----

IntRange parse_int_range(const std::string& s, const std::string& ctx) {
  const auto pos = s.find("..");
  if (pos == std::string::npos)
    throw ConfigError(ctx + ": expected 'lo..hi', got '" + s + "'");
  return {static_cast<int>(ioutil::parse_int(ioutil::trim(s.substr(0, pos)), ctx)),
          static_cast<int>(ioutil::parse_int(ioutil::trim(s.substr(pos + 2)), ctx))};
}

RealRange parse_real_range(const std::string& s, const std::string& ctx) {
  const auto pos = s.find("..");
  if (pos == std::string::npos)
    throw ConfigError(ctx + ": expected 'lo..hi', got '" + s + "'");
  return {ioutil::parse_double(ioutil::trim(s.substr(0, pos)), ctx),
          ioutil::parse_double(ioutil::trim(s.substr(pos + 2)), ctx)};
}

WorldGenConfig load_world_cfg(const ConfigFile& cf, std::uint64_t seed) {
  WorldGenConfig w;
  w.seed = seed;
  if (cf.has("world", "n_patterns"))
    w.n_patterns = parse_int_range(cf.get_str("world", "n_patterns", ""), "world/n_patterns");
  if (cf.has("world", "nodes_per_pattern"))
    w.nodes_per_pattern =
        parse_int_range(cf.get_str("world", "nodes_per_pattern", ""), "world/nodes_per_pattern");
  w.n_classes = static_cast<int>(cf.get_int("world", "n_classes", w.n_classes));
  if (cf.has("world", "offset_range"))
    w.pattern_offset_range =
        parse_real_range(cf.get_str("world", "offset_range", ""), "world/offset_range");
  if (cf.has("world", "line_length_range"))
    w.line_length_range =
        parse_real_range(cf.get_str("world", "line_length_range", ""), "world/line_length_range");
  if (cf.has("world", "circle_radius_range"))
    w.circle_radius_range = parse_real_range(cf.get_str("world", "circle_radius_range", ""),
                                             "world/circle_radius_range");
  if (cf.has("world", "gaussian_sigma_range"))
    w.gaussian_sigma_range = parse_real_range(cf.get_str("world", "gaussian_sigma_range", ""),
                                              "world/gaussian_sigma_range");
  if (cf.has("world", "patterns")) {
    w.pattern_kinds.clear();
    for (const auto& p : ioutil::split(cf.get_str("world", "patterns", ""), ',')) {
      const std::string t = ioutil::trim(p);
      if (t == "line") w.pattern_kinds.push_back(PatternKind::line);
      else if (t == "circle") w.pattern_kinds.push_back(PatternKind::circle);
      else if (t == "gaussian") w.pattern_kinds.push_back(PatternKind::gaussian);
      else throw ConfigError("world/patterns: unknown pattern '" + t + "'");
    }
  }
  return w;
}

NoiseConfig load_noise_cfg(const ConfigFile& cf) {
  NoiseConfig n;
  const std::string dist = cf.get_str("noise", "trans_dist", "normal");
  if (dist == "normal") n.trans_dist = TransDist::normal;
  else if (dist == "uniform") n.trans_dist = TransDist::uniform;
  else throw ConfigError("noise/trans_dist: expected normal|uniform, got '" + dist + "'");
  n.e_trans_sigma = cf.get_real("noise", "e_trans_sigma", n.e_trans_sigma);
  if (cf.has("noise", "e_trans_range"))
    n.e_trans_range =
        parse_real_range(cf.get_str("noise", "e_trans_range", ""), "noise/e_trans_range");
  if (cf.has("noise", "orient_range_deg")) {
    const RealRange deg =
        parse_real_range(cf.get_str("noise", "orient_range_deg", ""), "noise/orient_range_deg");
    n.orient_range = {deg.lo * M_PI / 180.0, deg.hi * M_PI / 180.0};
  }
  n.e_dropout = cf.get_real("noise", "e_dropout", n.e_dropout);
  n.e_fp = cf.get_real("noise", "e_fp", n.e_fp);
  n.alpha_misclass = cf.get_real("noise", "alpha_misclass", n.alpha_misclass);
  n.e_crop_max = cf.get_real("noise", "e_crop_max", n.e_crop_max);
  if (cf.has("noise", "scale_range"))
    n.scale_range = parse_real_range(cf.get_str("noise", "scale_range", ""), "noise/scale_range");
  n.validate();
  return n;
}

GraphConfig load_graph_cfg(const ConfigFile& cf) {
  GraphConfig g;
  const std::string th = cf.get_str("graph", "threshold", "auto");
  if (th == "auto") g.threshold_mode = GraphConfig::ThresholdMode::mean_pairwise;
  else if (th == "nearest") g.threshold_mode = GraphConfig::ThresholdMode::mean_nearest;
  else {
    g.threshold_mode = GraphConfig::ThresholdMode::explicit_value;
    g.edge_threshold = ioutil::parse_double(th, "graph/threshold");
  }
  g.visual_range = cf.get_real("graph", "visual_range", g.visual_range);
  g.include_self_loops = cf.get_flag("graph", "self_loops", g.include_self_loops);
  return g;
}

MatchConfig load_match_cfg(const ConfigFile& cf, std::uint64_t seed) {
  MatchConfig m;
  m.K = static_cast<int>(cf.get_int("match", "K", m.K));
  m.t_ransac = static_cast<int>(cf.get_int("match", "t_ransac", m.t_ransac));
  m.inlier_radius = cf.get_real("match", "inlier_radius", m.inlier_radius);
  m.max_iterations = static_cast<int>(cf.get_int("match", "max_iterations", m.max_iterations));
  m.seed = seed;
  m.validate();
  return m;
}

GnnConfig load_gnn_cfg(const ConfigFile& cf, int n_classes) {
  GnnConfig g;
  g.n_classes = n_classes;
  g.input_encoding = input_encoding_from_name(cf.get_str("gnn", "encoding", "xyz_embed"));
  g.embed_dim = static_cast<int>(cf.get_int("gnn", "embed_dim", g.embed_dim));
  g.n_layers = static_cast<int>(cf.get_int("gnn", "n_layers", g.n_layers));
  g.hidden_dim = static_cast<int>(cf.get_int("gnn", "hidden_dim", g.hidden_dim));
  g.descriptor_dim = static_cast<int>(cf.get_int("gnn", "descriptor_dim", g.descriptor_dim));
  g.margin = cf.get_real("gnn", "margin", g.margin);
  g.validate();
  return g;
}

TrainConfig load_train_cfg(const ConfigFile& cf, std::uint64_t seed) {
  TrainConfig t;
  t.lr = cf.get_real("train", "lr", t.lr);
  t.lr_decay = cf.get_real("train", "lr_decay", t.lr_decay);
  t.decay_period = static_cast<int>(cf.get_int("train", "decay_period", t.decay_period));
  t.beta1 = cf.get_real("train", "beta1", t.beta1);
  t.beta2 = cf.get_real("train", "beta2", t.beta2);
  t.epochs = static_cast<int>(cf.get_int("train", "epochs", t.epochs));
  t.batch_anchors = static_cast<int>(cf.get_int("train", "batch_anchors", t.batch_anchors));
  t.samples_per_anchor =
      static_cast<int>(cf.get_int("train", "samples_per_anchor", t.samples_per_anchor));
  t.topk = static_cast<int>(cf.get_int("train", "topk", t.topk));
  t.val_fraction = cf.get_real("train", "val_fraction", t.val_fraction);
  t.seed = seed;
  t.validate();
  return t;
}

IngestConfig load_ingest_cfg(const ConfigFile& cf) {
  IngestConfig ic;
  ic.voxel_size = cf.get_real("ingest", "voxel_size", ic.voxel_size);
  if (cf.has("ingest", "removed_classes"))
    for (const auto& t : ioutil::split(cf.get_str("ingest", "removed_classes", ""), ','))
      ic.removed_classes.push_back(
          static_cast<int>(ioutil::parse_int(ioutil::trim(t), "ingest/removed_classes")));
  if (cf.has("ingest", "label_remap"))
    for (const auto& t : ioutil::split(cf.get_str("ingest", "label_remap", ""), ',')) {
      const auto colon = t.find(':');
      if (colon == std::string::npos)
        throw ConfigError("ingest/label_remap: expected 'raw:dense' pairs");
      ic.label_remap[static_cast<int>(
          ioutil::parse_int(ioutil::trim(t.substr(0, colon)), "ingest/label_remap"))] =
          static_cast<int>(ioutil::parse_int(ioutil::trim(t.substr(colon + 1)),
                                             "ingest/label_remap"));
    }
  return ic;
}

ScenarioConfig load_scenario(const ConfigFile& cf, Scenario s, std::uint64_t seed) {
  ScenarioConfig sc = make_scenario(s, seed);
  sc.n_queries = static_cast<int>(cf.get_int("scenario", "n_queries", sc.n_queries));
  sc.n_runs = static_cast<int>(cf.get_int("scenario", "n_runs", sc.n_runs));
  sc.occlusion = cf.get_flag("scenario", "occlusion", sc.occlusion);
  sc.occlusion_half_angle_deg =
      cf.get_real("scenario", "occlusion_half_angle_deg", sc.occlusion_half_angle_deg);
  if (cf.has("scenario", "visual_range_" + std::string(scenario_name(s))))
    sc.visual_range = cf.get_real("scenario", "visual_range_" + std::string(scenario_name(s)),
                                  sc.visual_range);
  sc.validate();
  return sc;
}

// ---- shared command plumbing ----

struct CmdContext {
  std::uint64_t seed = 0;
  fs::path out = ".";
  ConfigFile config;
  RunManifest manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void finish(const std::string& manifest_name) {
    manifest.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path mpath = out / manifest_name;
    manifest.save(mpath);
    for (const auto& artifact : manifest.outputs) tag_artifact(artifact, mpath);
  }
};

CmdContext make_context(const std::string& cmdline, std::uint64_t seed,
                        const std::string& config_path, const std::string& out) {
  CmdContext ctx;
  ctx.seed = seed;
  ctx.out = out;
  if (!config_path.empty()) {
    ctx.config = ConfigFile::parse_file(config_path);
    ctx.manifest.inputs.push_back(config_path);
  }
  ctx.manifest.command = cmdline;
  ctx.manifest.tool_version = kVersion;
  ctx.manifest.seed = seed;
  ctx.manifest.config_text = ctx.config.raw_text();
  return ctx;
}

std::unique_ptr<DescriptorExtractor> build_extractor(const std::string& name,
                                                     const ConfigFile& cf, int n_classes,
                                                     std::uint64_t seed,
                                                     const std::string& checkpoint_path) {
  HandcraftedConfig hcfg;
  hcfg.n_shells = static_cast<int>(cf.get_int("handcrafted", "n_shells", hcfg.n_shells));
  hcfg.shell_spacing = cf.get_real("handcrafted", "shell_spacing", hcfg.shell_spacing);
  hcfg.walk_length = static_cast<int>(cf.get_int("handcrafted", "walk_length", hcfg.walk_length));
  hcfg.n_walks = static_cast<int>(cf.get_int("handcrafted", "n_walks", hcfg.n_walks));
  hcfg.gos_distance_bin = cf.get_real("handcrafted", "gos_distance_bin", hcfg.gos_distance_bin);
  hcfg.gos_max_distance = cf.get_real("handcrafted", "gos_max_distance", hcfg.gos_max_distance);
  if (name == "gnn") {
    if (checkpoint_path.empty())
      throw ConfigError("extractor 'gnn' needs --checkpoint");
    Checkpoint ck = load_checkpoint(checkpoint_path);
    return std::make_unique<GnnExtractor>(std::move(ck.model));
  }
  return make_extractor(name, hcfg, n_classes, derive_seed(seed, "extractor"));
}

void validate_extractor_name(const std::string& name) {
  const auto names = extractor_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw CLI::ValidationError("--extractor", "unknown extractor '" + name +
                                                  "' (valid: " + valid + ")");
  }
}

// ---- commands ----

int cmd_gen(CmdContext& ctx) {
  const WorldGenConfig wcfg = load_world_cfg(ctx.config, derive_seed(ctx.seed, "gen-world"));
  const NoiseConfig ncfg = load_noise_cfg(ctx.config);
  const int min_objects = static_cast<int>(ctx.config.get_int("world", "min_objects", 0));
  const int n_positives = static_cast<int>(ctx.config.get_int("dataset", "n_positives", 9));
  const int n_anchors = static_cast<int>(ctx.config.get_int("dataset", "n_anchors", 0));
  const double visual_range = ctx.config.get_real("dataset", "visual_range", 30.0);
  ctx.config.require_all_consumed();

  const ObjectMap map =
      min_objects > 0 ? generate_training_map(wcfg, min_objects) : generate_world(wcfg);
  const std::uint64_t ds_seed = derive_seed(ctx.seed, "gen-dataset");
  const TripletDataset ds =
      make_triplet_dataset(map, ncfg, n_positives, ds_seed, visual_range, n_anchors);
  save_dataset(ds, map, ncfg, n_positives, visual_range, ds_seed, n_anchors, ctx.out);

  ctx.manifest.outputs = {(ctx.out / "map.txt").string(), (ctx.out / "config.txt").string(),
                          (ctx.out / "index.csv").string()};
  ctx.finish("manifest-gen.txt");
  std::cout << "gen: " << map.objects.size() << " objects, " << ds.size()
            << " constellations -> " << ctx.out.string() << "\n";
  return 0;
}

int cmd_ingest(CmdContext& ctx, const std::string& points_path) {
  IngestConfig icfg = load_ingest_cfg(ctx.config);
  ctx.config.require_all_consumed();
  const PointStream ps = load_points(points_path);
  if (icfg.n_classes_hint == 0) icfg.n_classes_hint = ps.n_classes_hint;
  const ObjectMap map = ingest_pointcloud(ps.points, icfg);
  const fs::path out_map = ctx.out / "map.txt";
  save_map(map, out_map);
  ctx.manifest.inputs.push_back(points_path);
  ctx.manifest.outputs = {out_map.string()};
  ctx.finish("manifest-ingest.txt");
  std::cout << "ingest: " << ps.points.size() << " points -> " << map.objects.size()
            << " objects, " << map.n_classes << " classes\n";
  return 0;
}

int cmd_extract(CmdContext& ctx, const std::string& map_path, const std::string& extractor_name,
                const std::string& checkpoint_path, bool local_frame) {
  validate_extractor_name(extractor_name);
  ObjectMap map = load_map(map_path);
  if (local_frame) map.frame_tag = FrameTag::local;
  const GraphConfig gcfg = resolve_graph_config(load_graph_cfg(ctx.config), map);
  auto ex = build_extractor(extractor_name, ctx.config, map.n_classes, ctx.seed, checkpoint_path);
  ctx.config.require_all_consumed();

  const DescriptorDatabase db = ex->extract(map, gcfg);
  const fs::path out_db = ctx.out / (extractor_name + "_db.txt");
  save_descriptor_db(db, out_db);
  ctx.manifest.inputs.push_back(map_path);
  if (!checkpoint_path.empty()) ctx.manifest.inputs.push_back(checkpoint_path);
  ctx.manifest.outputs = {out_db.string()};
  ctx.finish("manifest-extract.txt");
  std::cout << "extract: " << db.records.size() << " descriptors (" << extractor_name
            << ") -> " << out_db.string() << "\n";
  return 0;
}

int cmd_train(CmdContext& ctx, const std::string& dataset_dir, const std::string& resume_path) {
  DatasetFiles df;
  const TripletDataset ds = load_dataset(dataset_dir, &df);
  const GnnConfig gcfg = load_gnn_cfg(ctx.config, df.map.n_classes);
  const TrainConfig tcfg = load_train_cfg(ctx.config, ctx.seed);
  GraphConfig graw = load_graph_cfg(ctx.config);
  graw.visual_range = df.visual_range;
  const GraphConfig gcfg_graph = resolve_graph_config(graw, df.map);
  ctx.config.require_all_consumed();

  const GraphDataset gds = build_graph_dataset(ds, gcfg_graph);
  TrainStart start;
  const TrainStart* startp = nullptr;
  if (!resume_path.empty()) {
    Checkpoint ck = load_checkpoint(resume_path);
    if (!ck.adam) throw IoError(resume_path + ": checkpoint has no optimizer state to resume");
    start.model = std::move(ck.model);
    start.adam = std::move(*ck.adam);
    start.start_epoch = ck.epochs_completed;
    startp = &start;
    ctx.manifest.inputs.push_back(resume_path);
  }
  const TrainResult res = train(gds, gcfg, tcfg, startp);

  const fs::path best_path = ctx.out / "checkpoint.txt";
  const fs::path state_path = ctx.out / "state.txt";
  const fs::path metrics_path = ctx.out / "metrics.csv";
  Checkpoint best;
  best.model = res.best_model;
  best.epochs_completed = res.best_epoch + 1;
  save_checkpoint(best, best_path);
  Checkpoint state;
  state.model = res.final_model;
  state.adam = res.adam;
  state.epochs_completed = (startp ? startp->start_epoch : 0) + tcfg.epochs;
  save_checkpoint(state, state_path);
  save_metrics_csv(res.history, metrics_path);

  ctx.manifest.inputs.push_back(dataset_dir);
  ctx.manifest.outputs = {best_path.string(), state_path.string(), metrics_path.string()};
  ctx.finish("manifest-train.txt");
  std::cout << "train: best val top" << tcfg.topk << " = " << res.best_val_topk << " at epoch "
            << res.best_epoch << " -> " << best_path.string() << "\n";
  return 0;
}

int cmd_localize(CmdContext& ctx, const std::string& qlsm_path, const std::string& global_path,
                 const std::string& db_path, const std::string& extractor_name,
                 const std::string& checkpoint_path, const std::string& gt_str) {
  validate_extractor_name(extractor_name);
  ObjectMap qlsm = load_map(qlsm_path);
  qlsm.frame_tag = FrameTag::local;
  const ObjectMap global = load_map(global_path);
  const GraphConfig gcfg = resolve_graph_config(load_graph_cfg(ctx.config), global);
  const MatchConfig mcfg = load_match_cfg(ctx.config, derive_seed(ctx.seed, "ransac"));
  auto ex =
      build_extractor(extractor_name, ctx.config, global.n_classes, ctx.seed, checkpoint_path);
  ctx.config.require_all_consumed();

  PoseSE2z gt;
  const PoseSE2z* gtp = nullptr;
  if (!gt_str.empty()) {
    const auto parts = ioutil::split(gt_str, ',');
    if (parts.size() != 3) throw ConfigError("--gt expects 'x,y,yaw_deg'");
    gt = PoseSE2z(ioutil::parse_double(parts[0], "--gt"), ioutil::parse_double(parts[1], "--gt"),
                  ioutil::parse_double(parts[2], "--gt") * M_PI / 180.0);
    gtp = &gt;
  }

  LocalizeTiming timing;
  LocalizationResult res;
  if (!db_path.empty()) {
    const DescriptorDatabase gdb = load_descriptor_db(db_path);
    res = localize(qlsm, global, gdb, *ex, gcfg, mcfg, gtp, &timing);
    ctx.manifest.inputs.push_back(db_path);
  } else {
    res = localize(qlsm, global, *ex, gcfg, mcfg, gtp, &timing);
  }

  const fs::path out_csv = ctx.out / "result.csv";
  {
    auto f = ioutil::open_out(out_csv);
    f << result_csv_header() << "\n";
    write_result_row(f, 0, res, timing);
  }
  ctx.manifest.inputs.insert(ctx.manifest.inputs.end(), {qlsm_path, global_path});
  ctx.manifest.outputs = {out_csv.string()};
  ctx.finish("manifest-localize.txt");
  std::cout << "localize: success=" << (res.success ? "yes" : "no") << " pose=(" << res.pose.x
            << ", " << res.pose.y << ", " << res.pose.yaw * 180.0 / M_PI << " deg) inliers="
            << res.inlier_pairs.size() << "\n";
  return 0;
}

int cmd_eval(CmdContext& ctx, const std::string& global_path, const std::string& extractors_csv,
             const std::string& scenarios_csv, const std::string& checkpoint_path,
             bool per_query) {
  const ObjectMap global = load_map(global_path);
  const GraphConfig gcfg = resolve_graph_config(load_graph_cfg(ctx.config), global);
  const MatchConfig mcfg = load_match_cfg(ctx.config, 0);  // reseeded per query

  std::vector<std::unique_ptr<DescriptorExtractor>> owners;
  std::vector<const DescriptorExtractor*> extractors;
  for (const auto& raw : ioutil::split(extractors_csv, ',')) {
    const std::string name = ioutil::trim(raw);
    validate_extractor_name(name);
    owners.push_back(build_extractor(name, ctx.config, global.n_classes, ctx.seed,
                                     checkpoint_path));
    extractors.push_back(owners.back().get());
  }
  std::vector<ScenarioConfig> scenarios;
  for (const auto& raw : ioutil::split(scenarios_csv, ',')) {
    const Scenario s = scenario_from_name(ioutil::trim(raw));
    scenarios.push_back(load_scenario(ctx.config, s, derive_seed(ctx.seed, scenario_name(s))));
  }
  ctx.config.require_all_consumed();

  std::map<std::string, std::ofstream> row_files;
  auto sink = [&](const std::string& ex, const std::string& sc, int run, const QueryRow& row) {
    if (!per_query) return;
    const std::string key = ex + "-" + sc;
    auto it = row_files.find(key);
    if (it == row_files.end()) {
      auto f = ioutil::open_out(ctx.out / ("rows-" + key + ".csv"));
      f << "run," << result_csv_header() << "\n";
      it = row_files.emplace(key, std::move(f)).first;
    }
    it->second << run << ',';
    write_result_row(it->second, row.query_id, row.result, row.timing);
  };

  const BenchReport report = run_benchmark(global, extractors, scenarios, gcfg, mcfg, sink);
  row_files.clear();  // flush before tagging

  const fs::path csv_path = ctx.out / "report.csv";
  const fs::path txt_path = ctx.out / "report.txt";
  save_report_csv(report, csv_path);
  {
    auto f = ioutil::open_out(txt_path);
    f << format_report_table(report);
  }
  std::cout << format_report_table(report);

  ctx.manifest.inputs.push_back(global_path);
  if (!checkpoint_path.empty()) ctx.manifest.inputs.push_back(checkpoint_path);
  ctx.manifest.outputs = {csv_path.string(), txt_path.string()};
  if (per_query)
    for (const DescriptorExtractor* ex : extractors)
      for (const auto& sc : scenarios)
        ctx.manifest.outputs.push_back(
            (ctx.out / ("rows-" + ex->name() + "-" + std::string(scenario_name(sc.scenario)) +
                        ".csv"))
                .string());
  ctx.finish("manifest-eval.txt");
  return 0;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic constellation localization toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path, out_dir = ".";
  app.add_option("--seed", seed, "Base RNG seed")->capture_default_str();
  app.add_option("--config", config_path, "Config file (key=value with [sections])");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Generate a synthetic world and triplet dataset");

  std::string points_path;
  auto* ingest = app.add_subcommand("ingest", "Build an object map from a labeled point stream");
  ingest->add_option("points", points_path, "Point file: x y z instance_id class_id")->required();

  std::string map_path, extractor_name = "onion_hist", checkpoint_path;
  bool local_frame = false;
  auto* extract = app.add_subcommand("extract", "Compute a descriptor database for a map");
  extract->add_option("map", map_path, "Object map file")->required();
  extract->add_option("--extractor", extractor_name, "Descriptor family")
      ->capture_default_str();
  extract->add_option("--checkpoint", checkpoint_path, "Model checkpoint (extractor gnn)");
  extract->add_flag("--local-frame", local_frame, "Treat the map as a QLSM");

  std::string dataset_dir, resume_path;
  auto* train_cmd = app.add_subcommand("train", "Train the learned descriptor on a dataset dir");
  train_cmd->add_option("dataset", dataset_dir, "Dataset directory from 'gen'")->required();
  train_cmd->add_option("--resume", resume_path, "state.txt checkpoint to resume from");

  std::string qlsm_path, global_path, db_path, gt_str;
  auto* localize_cmd = app.add_subcommand("localize", "Localize one QLSM against a global map");
  localize_cmd->add_option("qlsm", qlsm_path, "QLSM map file (local frame)")->required();
  localize_cmd->add_option("global", global_path, "Global map file")->required();
  localize_cmd->add_option("--db", db_path, "Prebuilt global descriptor database");
  localize_cmd->add_option("--extractor", extractor_name, "Descriptor family")
      ->capture_default_str();
  localize_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint (extractor gnn)");
  localize_cmd->add_option("--gt", gt_str, "Ground truth 'x,y,yaw_deg' for error reporting");

  std::string extractors_csv = "onion_hist", scenarios_csv =
      "SelfLocalization,FewerObjects,AddedNoise";
  bool per_query = false;
  auto* eval_cmd = app.add_subcommand("eval", "Run benchmark scenarios and report eta");
  eval_cmd->add_option("global", global_path, "Global map file")->required();
  eval_cmd->add_option("--extractors", extractors_csv, "Comma-separated descriptor families")
      ->capture_default_str();
  eval_cmd->add_option("--scenarios", scenarios_csv, "Comma-separated scenario names")
      ->capture_default_str();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint (extractor gnn)");
  eval_cmd->add_flag("--per-query", per_query, "Write per-query result CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion") {
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    CmdContext ctx = make_context(join_args(argc, argv), seed, config_path, out_dir);
    if (gen->parsed()) return cmd_gen(ctx);
    if (ingest->parsed()) return cmd_ingest(ctx, points_path);
    if (extract->parsed())
      return cmd_extract(ctx, map_path, extractor_name, checkpoint_path, local_frame);
    if (train_cmd->parsed()) return cmd_train(ctx, dataset_dir, resume_path);
    if (localize_cmd->parsed())
      return cmd_localize(ctx, qlsm_path, global_path, db_path, extractor_name, checkpoint_path,
                          gt_str);
    if (eval_cmd->parsed())
      return cmd_eval(ctx, global_path, extractors_csv, scenarios_csv, checkpoint_path,
                      per_query);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

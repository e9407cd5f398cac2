#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "constell/core.hpp"
#include "constell/eval.hpp"
#include "constell/extractor.hpp"
#include "constell/gnn.hpp"
#include "constell/synth.hpp"
#include "constell/train.hpp"

namespace constell {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace ioutil {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0') || errno == ERANGE)
    throw IoError(ctx + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || (end && *end != '\0') || errno == ERANGE)
    throw IoError(ctx + ": bad integer '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& ctx) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || (end && *end != '\0') || errno == ERANGE || s.find('-') != std::string::npos)
    throw IoError(ctx + ": bad integer '" + s + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw IoError("cannot open for writing: " + p.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw NotFoundError("cannot open: " + p.string());
  return f;
}

}  // namespace ioutil

// ---------------------------------------------------------------------------
// Object map: "# n_classes=<k>" header, then "instance_id,class_label,x,y,z".
// ---------------------------------------------------------------------------

inline void save_map(const ObjectMap& map, const std::filesystem::path& path,
                     const std::string& comment = "") {
  auto f = ioutil::open_out(path);
  f << "# n_classes=" << map.n_classes << "\n";
  if (!comment.empty()) f << "# " << comment << "\n";
  for (const auto& o : map.objects)
    f << o.instance_id << ',' << o.class_label << ',' << ioutil::fmt_double(o.position.x())
      << ',' << ioutil::fmt_double(o.position.y()) << ',' << ioutil::fmt_double(o.position.z())
      << "\n";
}

inline ObjectMap load_map(const std::filesystem::path& path) {
  auto f = ioutil::open_in(path);
  ObjectMap map;
  map.n_classes = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = ioutil::trim(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("n_classes=");
      if (pos != std::string::npos)
        map.n_classes =
            static_cast<int>(ioutil::parse_int(ioutil::trim(line.substr(pos + 10)), ctx));
      continue;
    }
    const auto parts = ioutil::split(line, ',');
    if (parts.size() != 5) throw IoError(ctx + ": expected 5 fields, got " +
                                         std::to_string(parts.size()));
    SemanticObject o;
    o.instance_id = ioutil::parse_int(ioutil::trim(parts[0]), ctx);
    o.class_label = static_cast<int>(ioutil::parse_int(ioutil::trim(parts[1]), ctx));
    o.position = Vec3(ioutil::parse_double(ioutil::trim(parts[2]), ctx),
                      ioutil::parse_double(ioutil::trim(parts[3]), ctx),
                      ioutil::parse_double(ioutil::trim(parts[4]), ctx));
    map.objects.push_back(o);
  }
  if (map.n_classes <= 0) throw IoError(path.string() + ": missing '# n_classes=' header");
  map.validate();
  return map;
}

// ---------------------------------------------------------------------------
// Point stream: "x y z instance_id class_id"; optional "# n_classes=" header.
// ---------------------------------------------------------------------------

struct PointStream {
  std::vector<PointRecord> points;
  int n_classes_hint = 0;
};

inline void save_points(const std::vector<PointRecord>& pts, const std::filesystem::path& path,
                        int n_classes_hint = 0) {
  auto f = ioutil::open_out(path);
  if (n_classes_hint > 0) f << "# n_classes=" << n_classes_hint << "\n";
  for (const auto& p : pts)
    f << ioutil::fmt_double(p.x) << ' ' << ioutil::fmt_double(p.y) << ' '
      << ioutil::fmt_double(p.z) << ' ' << p.instance_id << ' ' << p.class_id << "\n";
}

inline PointStream load_points(const std::filesystem::path& path) {
  auto f = ioutil::open_in(path);
  PointStream ps;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = ioutil::trim(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("n_classes=");
      if (pos != std::string::npos)
        ps.n_classes_hint =
            static_cast<int>(ioutil::parse_int(ioutil::trim(line.substr(pos + 10)), ctx));
      continue;
    }
    std::istringstream ss(line);
    std::string fx, fy, fz, fid, fcls;
    if (!(ss >> fx >> fy >> fz >> fid >> fcls))
      throw IoError(ctx + ": expected 'x y z instance_id class_id'");
    PointRecord p;
    p.x = ioutil::parse_double(fx, ctx);
    p.y = ioutil::parse_double(fy, ctx);
    p.z = ioutil::parse_double(fz, ctx);
    p.instance_id = ioutil::parse_int(fid, ctx);
    p.class_id = static_cast<int>(ioutil::parse_int(fcls, ctx));
    ps.points.push_back(p);
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Descriptor database
// ---------------------------------------------------------------------------

inline void save_descriptor_db(const DescriptorDatabase& db, const std::filesystem::path& path) {
  auto f = ioutil::open_out(path);
  f << "# constell descriptor db v1\n";
  f << "# kind=" << (db.kind == DescriptorKind::vector ? "vector" : "walk_matrix") << "\n";
  f << "# rows=" << db.rows << " cols=" << db.cols << "\n";
  f << "# config_hash=" << db.config_hash << "\n";
  for (const auto& r : db.records) {
    f << r.instance_id;
    if (db.kind == DescriptorKind::vector) {
      for (long i = 0; i < r.desc.values.size(); ++i)
        f << ',' << ioutil::fmt_double(r.desc.values[i]);
    } else {
      for (long i = 0; i < r.desc.walks.rows(); ++i)
        for (long j = 0; j < r.desc.walks.cols(); ++j) f << ',' << r.desc.walks(i, j);
    }
    f << "\n";
  }
}

inline DescriptorDatabase load_descriptor_db(const std::filesystem::path& path) {
  auto f = ioutil::open_in(path);
  DescriptorDatabase db;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++lineno;
    line = ioutil::trim(line);
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("descriptor db v1") != std::string::npos) header_seen = true;
      if (line.find("kind=walk_matrix") != std::string::npos)
        db.kind = DescriptorKind::walk_matrix;
      auto rpos = line.find("rows=");
      if (rpos != std::string::npos) {
        std::istringstream ss(line.substr(rpos));
        std::string t1, t2;
        ss >> t1 >> t2;
        db.rows = ioutil::parse_int(t1.substr(5), ctx);
        if (t2.rfind("cols=", 0) == 0) db.cols = ioutil::parse_int(t2.substr(5), ctx);
      }
      auto hpos = line.find("config_hash=");
      if (hpos != std::string::npos) db.config_hash = ioutil::trim(line.substr(hpos + 12));
      continue;
    }
    if (!header_seen) throw IoError(ctx + ": not a descriptor db file");
    const auto parts = ioutil::split(line, ',');
    const long expected = db.rows * db.cols;
    if (static_cast<long>(parts.size()) != expected + 1)
      throw IoError(ctx + ": expected " + std::to_string(expected + 1) + " fields");
    DescriptorRecord rec;
    rec.instance_id = ioutil::parse_int(parts[0], ctx);
    if (db.kind == DescriptorKind::vector) {
      Eigen::VectorXd v(expected);
      for (long i = 0; i < expected; ++i)
        v[i] = ioutil::parse_double(parts[static_cast<std::size_t>(i) + 1], ctx);
      rec.desc = Descriptor::from_vector(v);
    } else {
      Eigen::MatrixXi w(db.rows, db.cols);
      for (long i = 0; i < db.rows; ++i)
        for (long j = 0; j < db.cols; ++j)
          w(i, j) = static_cast<int>(
              ioutil::parse_int(parts[static_cast<std::size_t>(i * db.cols + j) + 1], ctx));
      rec.desc = Descriptor::from_walks(w);
    }
    db.records.push_back(std::move(rec));
  }
  if (!header_seen) throw IoError(path.string() + ": not a descriptor db file");
  return db;
}

// ---------------------------------------------------------------------------
// Model checkpoint (text, exact round-trip via %.17g)
// ---------------------------------------------------------------------------

struct Checkpoint {
  GnnModel model;
  std::optional<AdamState> adam;
  int epochs_completed = 0;
};

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  auto f = ioutil::open_out(path);
  const GnnConfig& c = ck.model.cfg;
  f << "# constell gnn checkpoint v1\n";
  f << "encoding=" << input_encoding_name(c.input_encoding) << "\n";
  f << "n_classes=" << c.n_classes << "\n";
  f << "embed_dim=" << c.embed_dim << "\n";
  f << "n_layers=" << c.n_layers << "\n";
  f << "hidden_dim=" << c.hidden_dim << "\n";
  f << "descriptor_dim=" << c.descriptor_dim << "\n";
  f << "margin=" << ioutil::fmt_double(c.margin) << "\n";
  f << "epochs_completed=" << ck.epochs_completed << "\n";
  auto write_mat = [&f](const std::string& tag, const std::string& name,
                        const Eigen::MatrixXd& m) {
    f << tag << ' ' << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    for (long r = 0; r < m.rows(); ++r) {
      for (long cc = 0; cc < m.cols(); ++cc)
        f << (cc ? " " : "") << ioutil::fmt_double(m(r, cc));
      f << "\n";
    }
  };
  for (const auto& [name, m] : ck.model.params) write_mat("param", name, m);
  if (ck.adam) {
    f << "adam_t=" << ck.adam->t << "\n";
    for (std::size_t k = 0; k < ck.model.params.size(); ++k) {
      write_mat("adam_m", ck.model.params[k].first, ck.adam->m[k]);
      write_mat("adam_v", ck.model.params[k].first, ck.adam->v[k]);
    }
  }
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto f = ioutil::open_in(path);
  std::string line;
  // The version marker sits in the leading comment block (possibly after a
  // manifest tag).
  bool version_seen = false;
  while (std::getline(f, line)) {
    const std::string t = ioutil::trim(line);
    if (t.empty()) continue;
    if (t[0] != '#') break;
    if (t.find("constell gnn checkpoint v1") != std::string::npos) {
      version_seen = true;
      break;
    }
  }
  if (!version_seen) throw IoError(path.string() + ": not a checkpoint file");

  Checkpoint ck;
  GnnConfig cfg;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> params;
  std::vector<Eigen::MatrixXd> adam_m, adam_v;
  long adam_t = -1;
  int lineno = 1;

  auto read_mat = [&](std::istringstream& head, const std::string& ctx) {
    std::string name;
    long rows = 0, cols = 0;
    if (!(head >> name >> rows >> cols)) throw IoError(ctx + ": bad matrix header");
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
      if (!std::getline(f, line)) throw IoError(ctx + ": truncated matrix");
      ++lineno;
      std::istringstream row(line);
      std::string tok;
      for (long cc = 0; cc < cols; ++cc) {
        if (!(row >> tok)) throw IoError(ctx + ": truncated row");
        m(r, cc) = ioutil::parse_double(tok, ctx);
      }
    }
    return std::make_pair(name, m);
  };

  while (std::getline(f, line)) {
    ++lineno;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    line = ioutil::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "param" || key == "adam_m" || key == "adam_v") {
      auto [name, m] = read_mat(ss, ctx);
      if (key == "param") params.emplace_back(name, std::move(m));
      else if (key == "adam_m") adam_m.push_back(std::move(m));
      else adam_v.push_back(std::move(m));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(ctx + ": expected key=value");
    const std::string k = ioutil::trim(line.substr(0, eq));
    const std::string v = ioutil::trim(line.substr(eq + 1));
    if (k == "encoding") cfg.input_encoding = input_encoding_from_name(v);
    else if (k == "n_classes") cfg.n_classes = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "embed_dim") cfg.embed_dim = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "n_layers") cfg.n_layers = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "hidden_dim") cfg.hidden_dim = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "descriptor_dim")
      cfg.descriptor_dim = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "margin") cfg.margin = ioutil::parse_double(v, ctx);
    else if (k == "epochs_completed")
      ck.epochs_completed = static_cast<int>(ioutil::parse_int(v, ctx));
    else if (k == "adam_t") adam_t = ioutil::parse_int(v, ctx);
    else throw IoError(ctx + ": unknown key '" + k + "'");
  }

  ck.model.cfg = cfg;
  ck.model.params = std::move(params);
  if (adam_t >= 0) {
    if (adam_m.size() != ck.model.params.size() || adam_v.size() != ck.model.params.size())
      throw IoError(path.string() + ": adam state incomplete");
    AdamState st;
    st.t = adam_t;
    st.m = std::move(adam_m);
    st.v = std::move(adam_v);
    ck.adam = std::move(st);
  }
  return ck;
}

// ---------------------------------------------------------------------------
// Metrics / results CSV
// ---------------------------------------------------------------------------

inline void save_metrics_csv(const std::vector<EpochStats>& history,
                             const std::filesystem::path& path) {
  auto f = ioutil::open_out(path);
  f << "epoch,train_loss,val_loss,train_topK,val_topK\n";
  for (const auto& e : history)
    f << e.epoch << ',' << ioutil::fmt_double(e.train_loss) << ','
      << ioutil::fmt_double(e.val_loss) << ',' << ioutil::fmt_double(e.train_topk) << ','
      << ioutil::fmt_double(e.val_topk) << "\n";
}

inline void write_result_row(std::ostream& os, int query_id, const LocalizationResult& r,
                             const LocalizeTiming& t) {
  os << query_id << ',' << (r.success ? 1 : 0) << ',' << ioutil::fmt_double(r.pose.x) << ','
     << ioutil::fmt_double(r.pose.y) << ',' << ioutil::fmt_double(r.pose.yaw * 180.0 / M_PI)
     << ',' << ioutil::fmt_double(r.translation_error) << ',' << r.inlier_pairs.size() << ','
     << ioutil::fmt_double(t.t_compute_s) << ',' << ioutil::fmt_double(t.t_match_s) << "\n";
}

inline const char* result_csv_header() {
  return "query_id,success,x,y,yaw_deg,trans_err_m,n_inliers,t_compute_s,t_match_s";
}

// ---------------------------------------------------------------------------
// Triplet dataset directory: map.txt + config.txt + index.csv
// ---------------------------------------------------------------------------

inline std::string noise_kinds_string(const std::vector<NoiseKind>& kinds) {
  std::string s;
  for (NoiseKind k : kinds) {
    if (!s.empty()) s += '+';
    s += noise_kind_name(k);
  }
  return s;
}

inline std::vector<NoiseKind> noise_kinds_from_string(const std::string& s) {
  std::vector<NoiseKind> kinds;
  if (s.empty()) return kinds;
  for (const auto& part : ioutil::split(s, '+')) kinds.push_back(noise_kind_from_name(part));
  return kinds;
}

struct DatasetFiles {
  ObjectMap map;
  NoiseConfig noise;
  int n_positives = 0;
  double visual_range = 30.0;
  std::uint64_t seed = 0;
  int n_anchors = 0;
};

inline void save_dataset(const TripletDataset& ds, const ObjectMap& map, const NoiseConfig& noise,
                         int n_positives, double visual_range, std::uint64_t seed, int n_anchors,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_map(map, dir / "map.txt");
  {
    auto f = ioutil::open_out(dir / "config.txt");
    f << "# constell dataset v1\n";
    f << "n_positives=" << n_positives << "\n";
    f << "visual_range=" << ioutil::fmt_double(visual_range) << "\n";
    f << "seed=" << seed << "\n";
    f << "n_anchors=" << n_anchors << "\n";
    f << "trans_dist=" << (noise.trans_dist == TransDist::normal ? "normal" : "uniform") << "\n";
    f << "e_trans_sigma=" << ioutil::fmt_double(noise.e_trans_sigma) << "\n";
    f << "e_trans_lo=" << ioutil::fmt_double(noise.e_trans_range.lo) << "\n";
    f << "e_trans_hi=" << ioutil::fmt_double(noise.e_trans_range.hi) << "\n";
    f << "orient_lo=" << ioutil::fmt_double(noise.orient_range.lo) << "\n";
    f << "orient_hi=" << ioutil::fmt_double(noise.orient_range.hi) << "\n";
    f << "e_dropout=" << ioutil::fmt_double(noise.e_dropout) << "\n";
    f << "e_fp=" << ioutil::fmt_double(noise.e_fp) << "\n";
    f << "alpha_misclass=" << ioutil::fmt_double(noise.alpha_misclass) << "\n";
    f << "e_crop_max=" << ioutil::fmt_double(noise.e_crop_max) << "\n";
    f << "scale_lo=" << ioutil::fmt_double(noise.scale_range.lo) << "\n";
    f << "scale_hi=" << ioutil::fmt_double(noise.scale_range.hi) << "\n";
  }
  {
    auto f = ioutil::open_out(dir / "index.csv");
    f << "anchor_id,variant_id,noise_kinds,seed\n";
    for (std::size_t a = 0; a < ds.anchors.size(); ++a) {
      f << ds.anchors[a].center.instance_id << ",0,,0\n";
      for (std::size_t v = 0; v < ds.positives[a].size(); ++v)
        f << ds.anchors[a].center.instance_id << ',' << (v + 1) << ','
          << noise_kinds_string(ds.meta[a][v].kinds) << ',' << ds.meta[a][v].seed << "\n";
    }
  }
}

/// Rebuild the dataset from a directory. Samples are regenerated from the
/// stored per-sample seeds; the index's noise_kinds column is validated
/// against the regeneration.
inline TripletDataset load_dataset(const std::filesystem::path& dir, DatasetFiles* files = nullptr) {
  DatasetFiles df;
  df.map = load_map(dir / "map.txt");
  {
    auto f = ioutil::open_in(dir / "config.txt");
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      line = ioutil::trim(line);
      const std::string ctx = (dir / "config.txt").string() + ":" + std::to_string(lineno);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError(ctx + ": expected key=value");
      const std::string k = ioutil::trim(line.substr(0, eq));
      const std::string v = ioutil::trim(line.substr(eq + 1));
      if (k == "n_positives") df.n_positives = static_cast<int>(ioutil::parse_int(v, ctx));
      else if (k == "visual_range") df.visual_range = ioutil::parse_double(v, ctx);
      else if (k == "seed") df.seed = ioutil::parse_uint(v, ctx);
      else if (k == "n_anchors") df.n_anchors = static_cast<int>(ioutil::parse_int(v, ctx));
      else if (k == "trans_dist")
        df.noise.trans_dist = v == "uniform" ? TransDist::uniform : TransDist::normal;
      else if (k == "e_trans_sigma") df.noise.e_trans_sigma = ioutil::parse_double(v, ctx);
      else if (k == "e_trans_lo") df.noise.e_trans_range.lo = ioutil::parse_double(v, ctx);
      else if (k == "e_trans_hi") df.noise.e_trans_range.hi = ioutil::parse_double(v, ctx);
      else if (k == "orient_lo") df.noise.orient_range.lo = ioutil::parse_double(v, ctx);
      else if (k == "orient_hi") df.noise.orient_range.hi = ioutil::parse_double(v, ctx);
      else if (k == "e_dropout") df.noise.e_dropout = ioutil::parse_double(v, ctx);
      else if (k == "e_fp") df.noise.e_fp = ioutil::parse_double(v, ctx);
      else if (k == "alpha_misclass") df.noise.alpha_misclass = ioutil::parse_double(v, ctx);
      else if (k == "e_crop_max") df.noise.e_crop_max = ioutil::parse_double(v, ctx);
      else if (k == "scale_lo") df.noise.scale_range.lo = ioutil::parse_double(v, ctx);
      else if (k == "scale_hi") df.noise.scale_range.hi = ioutil::parse_double(v, ctx);
      else throw IoError(ctx + ": unknown key '" + k + "'");
    }
  }
  TripletDataset ds = make_triplet_dataset(df.map, df.noise, df.n_positives, df.seed,
                                           df.visual_range, df.n_anchors);
  {
    auto f = ioutil::open_in(dir / "index.csv");
    std::string line;
    int lineno = 0;
    bool header_skipped = false;
    while (std::getline(f, line)) {
      ++lineno;
      line = ioutil::trim(line);
      if (line.empty() || line[0] == '#') continue;
      if (!header_skipped) {
        header_skipped = true;  // column header row
        continue;
      }
      const std::string ctx = (dir / "index.csv").string() + ":" + std::to_string(lineno);
      const auto parts = ioutil::split(line, ',');
      if (parts.size() != 4) throw IoError(ctx + ": expected 4 fields");
      const int variant = static_cast<int>(ioutil::parse_int(parts[1], ctx));
      if (variant == 0) continue;
      const std::int64_t anchor_id = ioutil::parse_int(parts[0], ctx);
      std::size_t a = 0;
      for (; a < ds.anchors.size(); ++a)
        if (ds.anchors[a].center.instance_id == anchor_id) break;
      if (a == ds.anchors.size()) throw IoError(ctx + ": unknown anchor id");
      const auto& meta = ds.meta[a][static_cast<std::size_t>(variant - 1)];
      if (noise_kinds_string(meta.kinds) != parts[2] ||
          meta.seed != ioutil::parse_uint(parts[3], ctx))
        throw IoError(ctx + ": index does not match regenerated dataset");
    }
  }
  if (files) *files = df;
  return ds;
}

// ---------------------------------------------------------------------------
// Benchmark report
// ---------------------------------------------------------------------------

inline void save_report_csv(const BenchReport& rep, const std::filesystem::path& path) {
  auto f = ioutil::open_out(path);
  f << "extractor,scenario,eta_mean,eta_std,t_compute_s,t_match_s,t_total_s\n";
  for (const auto& c : rep.cells)
    f << c.extractor << ',' << c.scenario << ',' << ioutil::fmt_double(c.eta_mean) << ','
      << ioutil::fmt_double(c.eta_std) << ',' << ioutil::fmt_double(c.t_compute_mean) << ','
      << ioutil::fmt_double(c.t_match_mean) << ',' << ioutil::fmt_double(c.t_total_mean) << "\n";
}

/// Aligned text table: one row per extractor, one eta column per scenario.
inline std::string format_report_table(const BenchReport& rep) {
  std::vector<std::string> extractors, scenarios;
  for (const auto& c : rep.cells) {
    if (std::find(extractors.begin(), extractors.end(), c.extractor) == extractors.end())
      extractors.push_back(c.extractor);
    if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end())
      scenarios.push_back(c.scenario);
  }
  auto cell_text = [&](const std::string& ex, const std::string& sc) -> std::string {
    for (const auto& c : rep.cells)
      if (c.extractor == ex && c.scenario == sc) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f +- %.2f", c.eta_mean, c.eta_std);
        return buf;
      }
    return "-";
  };
  std::size_t w0 = std::strlen("descriptor");
  for (const auto& e : extractors) w0 = std::max(w0, e.size());
  std::vector<std::size_t> w(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    w[s] = scenarios[s].size();
    for (const auto& e : extractors) w[s] = std::max(w[s], cell_text(e, scenarios[s]).size());
  }
  std::ostringstream os;
  os << "Translation Success Rate (eta) [%]\n";
  os << std::string(w0, ' ') << "  ";
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    os << scenarios[s] << std::string(w[s] - scenarios[s].size() + 2, ' ');
  os << "\n";
  for (const auto& e : extractors) {
    os << e << std::string(w0 - e.size(), ' ') << "  ";
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const std::string t = cell_text(e, scenarios[s]);
      os << t << std::string(w[s] - t.size() + 2, ' ');
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace constell

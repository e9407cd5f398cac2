#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "constell/core.hpp"
#include "constell/rng.hpp"
#include "constell/tape.hpp"

namespace constell {

enum class InputEncoding { xyz, xyz_integer, xyz_onehot, xyz_embed };

inline const char* input_encoding_name(InputEncoding e) {
  switch (e) {
    case InputEncoding::xyz: return "xyz";
    case InputEncoding::xyz_integer: return "xyz_integer";
    case InputEncoding::xyz_onehot: return "xyz_onehot";
    case InputEncoding::xyz_embed: return "xyz_embed";
  }
  return "?";
}

inline InputEncoding input_encoding_from_name(const std::string& s) {
  for (InputEncoding e : {InputEncoding::xyz, InputEncoding::xyz_integer,
                          InputEncoding::xyz_onehot, InputEncoding::xyz_embed})
    if (s == input_encoding_name(e)) return e;
  throw NotFoundError("unknown input encoding '" + s + "'");
}

/// Network shape: ResGCN backbone of Max-Relative convolutions, fusion block,
/// per-node head, attention readout. Defaults: 14 layers, width 64,
/// descriptor 64, N_embed = 3, triplet margin 0.2.
struct GnnConfig {
  InputEncoding input_encoding = InputEncoding::xyz_embed;
  int n_classes = 20;
  int embed_dim = 3;  // N_embed
  int n_layers = 14;
  int hidden_dim = 64;
  int descriptor_dim = 64;
  double margin = 0.2;

  int input_dim() const {
    switch (input_encoding) {
      case InputEncoding::xyz: return 3;
      case InputEncoding::xyz_integer: return 4;
      case InputEncoding::xyz_onehot: return 3 + n_classes;
      case InputEncoding::xyz_embed: return 3 + embed_dim;
    }
    return 3;
  }

  void validate() const {
    if (n_classes < 1 || embed_dim < 1 || n_layers < 1 || hidden_dim < 1 || descriptor_dim < 1)
      throw ContractViolation("GnnConfig: dimensions must be positive");
    if (margin < 0.0) throw ContractViolation("GnnConfig: margin must be non-negative");
  }
};

/// All learnable parameters as named dense matrices, in a fixed order so the
/// optimizer state and checkpoints stay aligned.
struct GnnModel {
  GnnConfig cfg;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> params;

  static GnnModel init(const GnnConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    GnnModel m;
    m.cfg = cfg;
    auto glorot = [&](const std::string& name, long rows, long cols) {
      auto rng = make_rng(derive_seed(seed, name.c_str()));
      const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      std::uniform_real_distribution<double> u(-limit, limit);
      Eigen::MatrixXd w(rows, cols);
      for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) w(r, c) = u(rng);
      m.params.emplace_back(name, std::move(w));
    };
    auto zeros = [&](const std::string& name, long cols) {
      m.params.emplace_back(name, Eigen::MatrixXd::Zero(1, cols));
    };

    if (cfg.input_encoding == InputEncoding::xyz_embed)
      glorot("embed", cfg.n_classes, cfg.embed_dim);
    int in_dim = cfg.input_dim();
    for (int l = 0; l < cfg.n_layers; ++l) {
      glorot("conv" + std::to_string(l) + ".W", 2 * in_dim, cfg.hidden_dim);
      zeros("conv" + std::to_string(l) + ".b", cfg.hidden_dim);
      in_dim = cfg.hidden_dim;
    }
    glorot("fusion.W", static_cast<long>(cfg.n_layers) * cfg.hidden_dim, cfg.hidden_dim);
    zeros("fusion.b", cfg.hidden_dim);
    glorot("head.W", 2 * cfg.hidden_dim, cfg.hidden_dim);
    zeros("head.b", cfg.hidden_dim);
    glorot("gate.W", cfg.hidden_dim, cfg.descriptor_dim);
    zeros("gate.b", cfg.descriptor_dim);
    glorot("theta.W", cfg.hidden_dim, cfg.descriptor_dim);
    zeros("theta.b", cfg.descriptor_dim);
    return m;
  }

  const Eigen::MatrixXd& param(const std::string& name) const {
    for (const auto& [n, v] : params)
      if (n == name) return v;
    throw NotFoundError("GnnModel: no parameter '" + name + "'");
  }

  std::size_t n_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, v] : params) n += static_cast<std::size_t>(v.size());
    return n;
  }
};

/// Node feature matrix for the configured encoding (no tape; the traced
/// forward repeats the embedding lookup on-tape so the table trains).
inline Eigen::MatrixXd encode_inputs(const ConstellationGraph& g, const GnnModel& model) {
  const GnnConfig& cfg = model.cfg;
  const long n = static_cast<long>(g.nodes.size());
  Eigen::MatrixXd x(n, cfg.input_dim());
  for (long i = 0; i < n; ++i) {
    const auto& node = g.nodes[static_cast<std::size_t>(i)];
    if (node.class_label < 0 || node.class_label >= cfg.n_classes)
      throw ContractViolation("encode_inputs: class label out of range");
    x(i, 0) = node.position.x();
    x(i, 1) = node.position.y();
    x(i, 2) = node.position.z();
    switch (cfg.input_encoding) {
      case InputEncoding::xyz: break;
      case InputEncoding::xyz_integer: x(i, 3) = node.class_label; break;
      case InputEncoding::xyz_onehot:
        x.row(i).segment(3, cfg.n_classes).setZero();
        x(i, 3 + node.class_label) = 1.0;
        break;
      case InputEncoding::xyz_embed:
        x.row(i).segment(3, cfg.embed_dim) = model.param("embed").row(node.class_label);
        break;
    }
  }
  return x;
}

/// One Max-Relative convolution: x_i' = FC([x_i ; max_j (x_j - x_i)]), plus
/// the input as a residual when dimensions agree. nbrs must include the
/// self-loop so every node has a neighbor.
inline Eigen::MatrixXd max_relative_conv(const Eigen::MatrixXd& x,
                                         const std::vector<std::vector<int>>& nbrs,
                                         const Eigen::MatrixXd& W, const Eigen::MatrixXd& b) {
  if (W.rows() != 2 * x.cols())
    throw ContractViolation("max_relative_conv: weight shape mismatch");
  Eigen::MatrixXd rel(x.rows(), x.cols());
  for (long i = 0; i < x.rows(); ++i) {
    const auto& ns = nbrs[static_cast<std::size_t>(i)];
    if (ns.empty()) throw ContractViolation("max_relative_conv: node without neighbors");
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Constant(
        x.cols(), -std::numeric_limits<double>::infinity());
    for (int j : ns) m = m.cwiseMax(x.row(j) - x.row(i));
    rel.row(i) = m;
  }
  Eigen::MatrixXd cat(x.rows(), 2 * x.cols());
  cat << x, rel;
  Eigen::MatrixXd out = cat * W;
  out.rowwise() += b.row(0);
  if (out.cols() == x.cols()) out += x;
  return out;
}

/// Attention readout (gated sum): r = sum_n softmax_n(h_gate(x_n)) .* h_theta(x_n),
/// with the softmax taken over nodes independently per output channel.
inline Eigen::VectorXd attention_pool(const Eigen::MatrixXd& h, const Eigen::MatrixXd& gate_w,
                                      const Eigen::MatrixXd& gate_b, const Eigen::MatrixXd& theta_w,
                                      const Eigen::MatrixXd& theta_b) {
  if (h.rows() == 0) throw DegenerateInput("attention_pool: empty graph");
  Eigen::MatrixXd a = h * gate_w;
  a.rowwise() += gate_b.row(0);
  Eigen::MatrixXd v = h * theta_w;
  v.rowwise() += theta_b.row(0);
  Eigen::VectorXd r(a.cols());
  for (long c = 0; c < a.cols(); ++c) {
    const Eigen::VectorXd e = (a.col(c).array() - a.col(c).maxCoeff()).exp();
    r[c] = (e / e.sum()).dot(v.col(c));
  }
  return r;
}

/// Full differentiable forward pass: tape plus the output node (1 x
/// descriptor_dim) and the tape ids of the model parameters, aligned with
/// model.params, for gradient readout after backward().
struct ForwardTrace {
  Tape tape;
  Tape::Id output = -1;
  std::vector<Tape::Id> param_ids;
};

inline ForwardTrace forward_trace(const ConstellationGraph& g, const GnnModel& model) {
  if (g.nodes.empty()) throw DegenerateInput("forward_trace: empty graph");
  const GnnConfig& cfg = model.cfg;
  cfg.validate();
  ForwardTrace ft;
  Tape& t = ft.tape;

  auto pid = [&](const std::string& name) {
    for (std::size_t k = 0; k < model.params.size(); ++k)
      if (model.params[k].first == name) return ft.param_ids[k];
    throw NotFoundError("forward_trace: no parameter '" + name + "'");
  };
  for (const auto& [name, v] : model.params) ft.param_ids.push_back(t.input(v));

  const long n = static_cast<long>(g.nodes.size());
  Eigen::MatrixXd pos(n, 3);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const auto& node = g.nodes[static_cast<std::size_t>(i)];
    if (node.class_label < 0 || node.class_label >= cfg.n_classes)
      throw ContractViolation("forward_trace: class label out of range");
    pos.row(i) = node.position.transpose();
    labels[static_cast<std::size_t>(i)] = node.class_label;
  }

  Tape::Id x;
  if (cfg.input_encoding == InputEncoding::xyz_embed) {
    Tape::Id p = t.input(pos);
    Tape::Id e = t.gather_rows(pid("embed"), labels);
    x = t.concat_cols({p, e});
  } else {
    Eigen::MatrixXd feat(n, cfg.input_dim());
    feat.leftCols(3) = pos;
    if (cfg.input_encoding == InputEncoding::xyz_integer) {
      for (long i = 0; i < n; ++i) feat(i, 3) = labels[static_cast<std::size_t>(i)];
    } else if (cfg.input_encoding == InputEncoding::xyz_onehot) {
      feat.rightCols(cfg.n_classes).setZero();
      for (long i = 0; i < n; ++i) feat(i, 3 + labels[static_cast<std::size_t>(i)]) = 1.0;
    }
    x = t.input(feat);
  }

  const auto nbrs = g.adjacency(/*include_self=*/true);
  std::vector<Tape::Id> layer_outs;
  Tape::Id cur = x;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string tag = "conv" + std::to_string(l);
    Tape::Id mr = t.max_relative(cur, nbrs);
    Tape::Id cat = t.concat_cols({cur, mr});
    Tape::Id z = t.add_row(t.matmul(cat, pid(tag + ".W")), pid(tag + ".b"));
    if (t.value(z).cols() == t.value(cur).cols()) z = t.add(z, cur);
    cur = t.relu(z);
    layer_outs.push_back(cur);
  }

  Tape::Id fused =
      t.relu(t.add_row(t.matmul(t.concat_cols(layer_outs), pid("fusion.W")), pid("fusion.b")));
  Tape::Id pooled = t.repeat_row(t.col_max(fused), n);
  Tape::Id head_in = t.concat_cols({fused, pooled});
  Tape::Id h = t.relu(t.add_row(t.matmul(head_in, pid("head.W")), pid("head.b")));

  Tape::Id gate = t.softmax_cols(t.add_row(t.matmul(h, pid("gate.W")), pid("gate.b")));
  Tape::Id vals = t.add_row(t.matmul(h, pid("theta.W")), pid("theta.b"));
  ft.output = t.sum_rows(t.cwise_mul(gate, vals));
  return ft;
}

inline Descriptor gnn_forward(const ConstellationGraph& g, const GnnModel& model) {
  ForwardTrace ft = forward_trace(g, model);
  return Descriptor::from_vector(ft.tape.value(ft.output).row(0).transpose());
}

}  // namespace constell

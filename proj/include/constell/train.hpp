#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "constell/gnn.hpp"
#include "constell/graph.hpp"
#include "constell/rng.hpp"
#include "constell/synth.hpp"

namespace constell {

/// Adam recipe: lr 1e-3 decayed by 0.7 every decay_period epochs,
/// beta1/beta2 = 0.9/0.999, 100 epochs, batches of P anchor groups with A
/// samples each, model selection by validation topK (K = 5).
struct TrainConfig {
  double lr = 1e-3;
  double lr_decay = 0.7;
  int decay_period = 20;  // epochs between decay steps
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 100;
  int batch_anchors = 8;       // P anchor groups per batch
  int samples_per_anchor = 4;  // A samples drawn per group
  int topk = 5;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (lr <= 0.0) throw ContractViolation("TrainConfig: lr must be positive");
    if (lr_decay <= 0.0 || lr_decay > 1.0)
      throw ContractViolation("TrainConfig: lr_decay must be in (0, 1]");
    if (epochs < 0 || decay_period < 1 || batch_anchors < 2 || samples_per_anchor < 1 ||
        topk < 1)
      throw ContractViolation("TrainConfig: invalid batching parameters");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw ContractViolation("TrainConfig: val_fraction must be in [0, 1)");
  }
};

struct TripletLoss {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d embeddings, same shape as input
};

/// Batch-hard triplet loss: mean over anchors of
/// max(0, margin + max_p d(a,p) - min_n d(a,n)). Samples whose label has no
/// second member are skipped as anchors; a batch without any negative pair
/// is a contract violation.
inline TripletLoss batch_triplet_loss(const Eigen::MatrixXd& emb, const std::vector<int>& labels,
                                      double margin) {
  const long n = emb.rows();
  if (static_cast<long>(labels.size()) != n)
    throw ContractViolation("batch_triplet_loss: labels/embeddings size mismatch");
  bool has_negative = false;
  for (long i = 1; i < n && !has_negative; ++i) has_negative = labels[i] != labels[0];
  if (!has_negative)
    throw ContractViolation("batch_triplet_loss: batch needs at least two distinct labels");

  Eigen::MatrixXd dist(n, n);
  for (long i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (long j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = (emb.row(i) - emb.row(j)).norm();
  }

  TripletLoss out;
  out.grad = Eigen::MatrixXd::Zero(n, emb.cols());
  int n_anchors = 0;
  double total = 0.0;
  struct Active {
    long a, p, nn;
  };
  std::vector<Active> active;
  for (long a = 0; a < n; ++a) {
    long hardest_p = -1, hardest_n = -1;
    for (long j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)]) {
        if (hardest_p < 0 || dist(a, j) > dist(a, hardest_p)) hardest_p = j;
      } else {
        if (hardest_n < 0 || dist(a, j) < dist(a, hardest_n)) hardest_n = j;
      }
    }
    if (hardest_p < 0) continue;  // no positive for this anchor
    ++n_anchors;
    const double l = margin + dist(a, hardest_p) - dist(a, hardest_n);
    if (l > 0.0) {
      total += l;
      active.push_back({a, hardest_p, hardest_n});
    }
  }
  if (n_anchors == 0)
    throw ContractViolation("batch_triplet_loss: no anchor has a positive sample");

  out.loss = total / n_anchors;
  const double w = 1.0 / n_anchors;
  for (const auto& t : active) {
    if (dist(t.a, t.p) > 1e-12) {
      const Eigen::RowVectorXd g = w * (emb.row(t.a) - emb.row(t.p)) / dist(t.a, t.p);
      out.grad.row(t.a) += g;
      out.grad.row(t.p) -= g;
    }
    if (dist(t.a, t.nn) > 1e-12) {
      const Eigen::RowVectorXd g = w * (emb.row(t.a) - emb.row(t.nn)) / dist(t.a, t.nn);
      out.grad.row(t.a) -= g;
      out.grad.row(t.nn) += g;
    }
  }
  return out;
}

/// Fraction of samples whose K nearest other embeddings (L2, ties by index)
/// include one with a matching label.
inline double topk_ratio(const Eigen::MatrixXd& emb, const std::vector<int>& labels, int K) {
  const long n = emb.rows();
  if (static_cast<long>(labels.size()) != n)
    throw ContractViolation("topk_ratio: labels/embeddings size mismatch");
  if (n < K + 1) throw ContractViolation("topk_ratio: need at least K+1 embeddings");
  int hits = 0;
  std::vector<std::pair<double, long>> d(static_cast<std::size_t>(n) - 1);
  for (long i = 0; i < n; ++i) {
    d.clear();
    for (long j = 0; j < n; ++j)
      if (j != i) d.emplace_back((emb.row(i) - emb.row(j)).squaredNorm(), j);
    std::partial_sort(d.begin(), d.begin() + K, d.end());
    for (int k = 0; k < K; ++k)
      if (labels[static_cast<std::size_t>(d[static_cast<std::size_t>(k)].second)] ==
          labels[static_cast<std::size_t>(i)]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Adam first/second moment slots aligned with GnnModel::params.
struct AdamState {
  std::vector<Eigen::MatrixXd> m, v;
  long t = 0;

  static AdamState init(const GnnModel& model) {
    AdamState s;
    for (const auto& [name, p] : model.params) {
      s.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      s.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
    return s;
  }

  void step(GnnModel& model, const std::vector<Eigen::MatrixXd>& grads, double lr,
            const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < model.params.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grads[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grads[k].cwiseProduct(grads[k]);
      const Eigen::MatrixXd mhat = m[k] / bc1;
      const Eigen::MatrixXd vhat = v[k] / bc2;
      model.params[k].second.array() -=
          lr * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
    }
  }
};

/// Triplet dataset flattened to graphs with anchor-index labels.
struct GraphDataset {
  std::vector<ConstellationGraph> graphs;
  std::vector<int> labels;
  int n_groups = 0;
};

inline GraphDataset build_graph_dataset(const TripletDataset& ds, const GraphConfig& cfg) {
  GraphDataset out;
  for (const auto& [c, label] : ds.flatten()) {
    out.graphs.push_back(build_graph(*c, cfg));
    out.labels.push_back(label);
  }
  out.n_groups = static_cast<int>(ds.anchors.size());
  return out;
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0, val_loss = 0.0, train_topk = 0.0, val_topk = 0.0;
};

struct TrainResult {
  GnnModel best_model;
  GnnModel final_model;
  AdamState adam;  // state after the last epoch, for resuming
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_topk = -1.0;
};

namespace detail {

inline Eigen::MatrixXd embed_all(const std::vector<ConstellationGraph>& graphs,
                                 const std::vector<std::size_t>& idx, const GnnModel& model) {
  Eigen::MatrixXd e(static_cast<long>(idx.size()), model.cfg.descriptor_dim);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    ForwardTrace ft = forward_trace(graphs[idx[k]], model);
    e.row(static_cast<long>(k)) = ft.tape.value(ft.output).row(0);
  }
  return e;
}

inline double set_loss(const Eigen::MatrixXd& emb, const std::vector<int>& labels, double margin) {
  // A split with a single label has no negatives; report 0 rather than throw.
  bool two_labels = false;
  for (std::size_t i = 1; i < labels.size() && !two_labels; ++i)
    two_labels = labels[i] != labels[0];
  if (!two_labels) return 0.0;
  return batch_triplet_loss(emb, labels, margin).loss;
}

}  // namespace detail

/// End-to-end trainer. Splits anchor groups 80/20, runs batch-hard triplet
/// epochs with Adam, records per-epoch metrics, and returns the checkpoint
/// with the best validation topK. `start` resumes from a saved model/state.
struct TrainStart {
  GnnModel model;
  AdamState adam;
  int start_epoch = 0;  // epochs already completed
};

inline TrainResult train(const GraphDataset& ds, const GnnConfig& gcfg, const TrainConfig& tcfg,
                         const TrainStart* start = nullptr) {
  gcfg.validate();
  tcfg.validate();
  if (ds.n_groups < 2) throw ContractViolation("train: need at least 2 anchor groups");
  if (ds.graphs.size() != ds.labels.size())
    throw ContractViolation("train: graphs/labels size mismatch");

  // Group sample indices by label.
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(ds.n_groups));
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    groups[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  // 80/20 split over anchor groups, deterministic in the seed.
  std::vector<int> group_order(static_cast<std::size_t>(ds.n_groups));
  std::iota(group_order.begin(), group_order.end(), 0);
  {
    auto rng = make_rng(derive_seed(tcfg.seed, "split"));
    std::shuffle(group_order.begin(), group_order.end(), rng);
  }
  int n_val = static_cast<int>(std::lround(tcfg.val_fraction * ds.n_groups));
  n_val = std::clamp(n_val, tcfg.val_fraction > 0.0 ? 1 : 0, ds.n_groups - 2);
  std::vector<int> train_groups(group_order.begin(), group_order.end() - n_val);
  std::vector<int> val_groups(group_order.end() - n_val, group_order.end());

  auto flat_indices = [&](const std::vector<int>& gs) {
    std::vector<std::size_t> idx;
    for (int g : gs)
      for (std::size_t i : groups[static_cast<std::size_t>(g)]) idx.push_back(i);
    return idx;
  };
  const std::vector<std::size_t> train_idx = flat_indices(train_groups);
  const std::vector<std::size_t> val_idx = flat_indices(val_groups);
  auto labels_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> l;
    l.reserve(idx.size());
    for (std::size_t i : idx) l.push_back(ds.labels[i]);
    return l;
  };
  const std::vector<int> train_labels = labels_of(train_idx);
  const std::vector<int> val_labels = labels_of(val_idx);

  TrainResult res;
  GnnModel model = start ? start->model : GnnModel::init(gcfg, derive_seed(tcfg.seed, "init"));
  AdamState adam = start ? start->adam : AdamState::init(model);
  const int first_epoch = start ? start->start_epoch : 0;
  res.best_model = model;

  // Tiny validation splits can hold fewer than K+1 samples; clamp K there so
  // desk-scale runs stay well-defined.
  auto clamped_topk = [&](const Eigen::MatrixXd& e, const std::vector<int>& l) {
    const int k = std::min<int>(tcfg.topk, static_cast<int>(e.rows()) - 1);
    return k >= 1 ? topk_ratio(e, l, k) : 0.0;
  };
  auto record_epoch = [&](int epoch, double train_loss) {
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = train_loss;
    const Eigen::MatrixXd etr = detail::embed_all(ds.graphs, train_idx, model);
    const Eigen::MatrixXd eva = val_idx.empty() ? Eigen::MatrixXd()
                                                : detail::embed_all(ds.graphs, val_idx, model);
    st.train_topk = clamped_topk(etr, train_labels);
    if (!val_idx.empty()) {
      st.val_loss = detail::set_loss(eva, val_labels, gcfg.margin);
      st.val_topk = clamped_topk(eva, val_labels);
    }
    res.history.push_back(st);
    const double score = val_idx.empty() ? st.train_topk : st.val_topk;
    if (score > res.best_val_topk) {
      res.best_val_topk = score;
      res.best_epoch = epoch;
      res.best_model = model;
    }
  };

  auto rng = make_rng(derive_seed(tcfg.seed, "batches", static_cast<std::uint64_t>(first_epoch)));
  for (int epoch = first_epoch; epoch < first_epoch + tcfg.epochs; ++epoch) {
    const double lr = tcfg.lr * std::pow(tcfg.lr_decay, epoch / tcfg.decay_period);
    std::vector<int> order = train_groups;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t b0 = 0; b0 + 2 <= order.size(); b0 += static_cast<std::size_t>(tcfg.batch_anchors)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(tcfg.batch_anchors));
      if (b1 - b0 < 2) break;  // a single-group tail cannot form triplets

      std::vector<std::size_t> batch;
      std::vector<int> batch_labels;
      for (std::size_t k = b0; k < b1; ++k) {
        auto pool = groups[static_cast<std::size_t>(order[k])];
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t take =
            std::min(pool.size(), static_cast<std::size_t>(tcfg.samples_per_anchor));
        for (std::size_t s = 0; s < take; ++s) {
          batch.push_back(pool[s]);
          batch_labels.push_back(order[k]);
        }
      }

      std::vector<ForwardTrace> traces;
      traces.reserve(batch.size());
      Eigen::MatrixXd emb(static_cast<long>(batch.size()), gcfg.descriptor_dim);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        traces.push_back(forward_trace(ds.graphs[batch[k]], model));
        emb.row(static_cast<long>(k)) = traces[k].tape.value(traces[k].output).row(0);
      }
      TripletLoss tl = batch_triplet_loss(emb, batch_labels, gcfg.margin);
      epoch_loss += tl.loss;
      ++n_batches;

      std::vector<Eigen::MatrixXd> grads;
      grads.reserve(model.params.size());
      for (const auto& [name, p] : model.params)
        grads.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      for (std::size_t k = 0; k < batch.size(); ++k) {
        if (tl.grad.row(static_cast<long>(k)).isZero(0.0)) continue;
        traces[k].tape.backward(traces[k].output, tl.grad.row(static_cast<long>(k)));
        for (std::size_t pk = 0; pk < model.params.size(); ++pk)
          grads[pk] += traces[k].tape.grad(traces[k].param_ids[pk]);
      }
      adam.step(model, grads, lr, tcfg);
    }
    record_epoch(epoch, n_batches > 0 ? epoch_loss / n_batches : 0.0);
  }

  if (tcfg.epochs == 0) {
    // Contract: a 0-epoch run returns the starting model unchanged.
    res.best_model = model;
    res.best_epoch = first_epoch - 1;
  }
  res.final_model = model;
  res.adam = std::move(adam);
  return res;
}

}  // namespace constell

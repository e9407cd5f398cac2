#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "constell/core.hpp"

namespace constell {

/// Reverse-mode autodiff over dense matrices. Operations append nodes to the
/// tape; backward() walks them in reverse creation order. The op set is the
/// minimum needed for the descriptor network: affine layers, ReLU, column
/// concatenation, embedding lookup, max-relative aggregation, column-wise
/// max/softmax/sum, elementwise product.
class Tape {
 public:
  using Id = int;

  Id input(Eigen::MatrixXd v) {
    nodes_.push_back({std::move(v), {}, nullptr});
    return static_cast<Id>(nodes_.size()) - 1;
  }

  const Eigen::MatrixXd& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Eigen::MatrixXd& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

  /// C = A * B
  Id matmul(Id a, Id b) {
    if (value(a).cols() != value(b).rows())
      throw ContractViolation("matmul: inner dimensions disagree");
    Id out = input(value(a) * value(b));
    node(out).backward = [a, b, out](Tape& t) {
      t.node(a).grad += t.grad(out) * t.value(b).transpose();
      t.node(b).grad += t.value(a).transpose() * t.grad(out);
    };
    return out;
  }

  /// C = A + B (same shape)
  Id add(Id a, Id b) {
    check_same_shape(value(a), value(b), "add");
    Id out = input(value(a) + value(b));
    node(out).backward = [a, b, out](Tape& t) {
      t.node(a).grad += t.grad(out);
      t.node(b).grad += t.grad(out);
    };
    return out;
  }

  /// C = A with the 1 x cols bias row added to every row.
  Id add_row(Id a, Id bias_row) {
    if (value(bias_row).rows() != 1 || value(bias_row).cols() != value(a).cols())
      throw ContractViolation("Tape::add_row: bias must be 1 x cols(A)");
    Eigen::MatrixXd v = value(a);
    v.rowwise() += value(bias_row).row(0);
    Id out = input(std::move(v));
    node(out).backward = [a, bias_row, out](Tape& t) {
      t.node(a).grad += t.grad(out);
      t.node(bias_row).grad.row(0) += t.grad(out).colwise().sum();
    };
    return out;
  }

  Id relu(Id a) {
    Id out = input(value(a).cwiseMax(0.0));
    node(out).backward = [a, out](Tape& t) {
      t.node(a).grad.array() +=
          t.grad(out).array() * (t.value(a).array() > 0.0).cast<double>();
    };
    return out;
  }

  /// Horizontal concatenation; all inputs share the row count.
  Id concat_cols(const std::vector<Id>& ids) {
    if (ids.empty()) throw ContractViolation("Tape::concat_cols: no inputs");
    const long rows = value(ids[0]).rows();
    long cols = 0;
    for (Id id : ids) {
      if (value(id).rows() != rows)
        throw ContractViolation("Tape::concat_cols: row mismatch");
      cols += value(id).cols();
    }
    Eigen::MatrixXd v(rows, cols);
    long off = 0;
    for (Id id : ids) {
      v.middleCols(off, value(id).cols()) = value(id);
      off += value(id).cols();
    }
    Id out = input(std::move(v));
    node(out).backward = [ids, out](Tape& t) {
      long o = 0;
      for (Id id : ids) {
        const long c = t.value(id).cols();
        t.node(id).grad += t.grad(out).middleCols(o, c);
        o += c;
      }
    };
    return out;
  }

  /// out.row(k) = table.row(rows[k]) — embedding lookup.
  Id gather_rows(Id table, std::vector<int> rows) {
    Eigen::MatrixXd v(static_cast<long>(rows.size()), value(table).cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k] < 0 || rows[k] >= value(table).rows())
        throw ContractViolation("Tape::gather_rows: row index out of range");
      v.row(static_cast<long>(k)) = value(table).row(rows[k]);
    }
    Id out = input(std::move(v));
    node(out).backward = [table, rows = std::move(rows), out](Tape& t) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        t.node(table).grad.row(rows[k]) += t.grad(out).row(static_cast<long>(k));
    };
    return out;
  }

  /// out.row(i) = elementwise max over j in nbrs[i] of (x.row(j) - x.row(i)).
  /// Every neighbor list must be non-empty (self-loops guarantee this).
  Id max_relative(Id x, const std::vector<std::vector<int>>& nbrs) {
    const auto& xv = value(x);
    if (static_cast<long>(nbrs.size()) != xv.rows())
      throw ContractViolation("Tape::max_relative: adjacency size mismatch");
    Eigen::MatrixXd v(xv.rows(), xv.cols());
    Eigen::MatrixXi arg(xv.rows(), xv.cols());
    for (long i = 0; i < xv.rows(); ++i) {
      const auto& ns = nbrs[static_cast<std::size_t>(i)];
      if (ns.empty()) throw ContractViolation("Tape::max_relative: node without neighbors");
      for (long c = 0; c < xv.cols(); ++c) {
        double best = xv(ns[0], c) - xv(i, c);
        int best_j = ns[0];
        for (std::size_t k = 1; k < ns.size(); ++k) {
          const double cand = xv(ns[k], c) - xv(i, c);
          if (cand > best) {
            best = cand;
            best_j = ns[k];
          }
        }
        v(i, c) = best;
        arg(i, c) = best_j;
      }
    }
    Id out = input(std::move(v));
    node(out).backward = [x, arg = std::move(arg), out](Tape& t) {
      const auto& g = t.grad(out);
      auto& gx = t.node(x).grad;
      for (long i = 0; i < g.rows(); ++i)
        for (long c = 0; c < g.cols(); ++c) {
          gx(arg(i, c), c) += g(i, c);
          gx(i, c) -= g(i, c);
        }
    };
    return out;
  }

  /// 1 x cols row of per-column maxima over rows.
  Id col_max(Id a) {
    const auto& av = value(a);
    if (av.rows() == 0) throw DegenerateInput("Tape::col_max: empty input");
    Eigen::MatrixXd v(1, av.cols());
    std::vector<int> arg(static_cast<std::size_t>(av.cols()));
    for (long c = 0; c < av.cols(); ++c) {
      long r;
      v(0, c) = av.col(c).maxCoeff(&r);
      arg[static_cast<std::size_t>(c)] = static_cast<int>(r);
    }
    Id out = input(std::move(v));
    node(out).backward = [a, arg = std::move(arg), out](Tape& t) {
      for (long c = 0; c < t.grad(out).cols(); ++c)
        t.node(a).grad(arg[static_cast<std::size_t>(c)], c) += t.grad(out)(0, c);
    };
    return out;
  }

  /// Broadcast a 1 x cols row to n rows.
  Id repeat_row(Id row, long n) {
    if (value(row).rows() != 1) throw ContractViolation("Tape::repeat_row: input must be a row");
    Id out = input(value(row).replicate(n, 1));
    node(out).backward = [row, out](Tape& t) {
      t.node(row).grad.row(0) += t.grad(out).colwise().sum();
    };
    return out;
  }

  /// Softmax over rows, independently per column.
  Id softmax_cols(Id a) {
    const auto& av = value(a);
    Eigen::MatrixXd v(av.rows(), av.cols());
    for (long c = 0; c < av.cols(); ++c) {
      const Eigen::VectorXd col = av.col(c);
      const Eigen::VectorXd e = (col.array() - col.maxCoeff()).exp();
      v.col(c) = e / e.sum();
    }
    Id out = input(std::move(v));
    node(out).backward = [a, out](Tape& t) {
      const auto& s = t.value(out);
      const auto& g = t.grad(out);
      for (long c = 0; c < s.cols(); ++c) {
        const double dot = g.col(c).dot(s.col(c));
        t.node(a).grad.col(c).array() += s.col(c).array() * (g.col(c).array() - dot);
      }
    };
    return out;
  }

  /// Elementwise product.
  Id cwise_mul(Id a, Id b) {
    check_same_shape(value(a), value(b), "cwise_mul");
    Id out = input(value(a).cwiseProduct(value(b)));
    node(out).backward = [a, b, out](Tape& t) {
      t.node(a).grad += t.grad(out).cwiseProduct(t.value(b));
      t.node(b).grad += t.grad(out).cwiseProduct(t.value(a));
    };
    return out;
  }

  /// 1 x cols row of column sums.
  Id sum_rows(Id a) {
    Eigen::MatrixXd v = value(a).colwise().sum();
    Id out = input(v);
    node(out).backward = [a, out](Tape& t) {
      t.node(a).grad.rowwise() += t.grad(out).row(0);
    };
    return out;
  }

  /// Seed the root gradient and sweep the tape in reverse creation order.
  void backward(Id root, const Eigen::MatrixXd& seed) {
    check_same_shape(value(root), seed, "backward seed");
    for (auto& n : nodes_) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    node(root).grad = seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->backward) it->backward(*this);
  }

 private:
  struct NodeRec {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void(Tape&)> backward;
  };

  NodeRec& node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }

  static void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               const char* where) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ContractViolation(std::string("Tape::") + where + ": shape mismatch");
  }

  std::vector<NodeRec> nodes_;
};

}  // namespace constell

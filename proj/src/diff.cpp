// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/diff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "graphmix/errors.hpp"

namespace graphmix {
namespace {

#ifdef NDEBUG
std::atomic<bool> g_finite_checks{false};
#else
std::atomic<bool> g_finite_checks{true};
#endif

using IndexVec = std::shared_ptr<const std::vector<Index>>;
using MaskVec = std::shared_ptr<const std::vector<std::uint8_t>>;

IndexVec copy_index(std::span<const Index> s) {
  return std::make_shared<const std::vector<Index>>(s.begin(), s.end());
}

MaskVec copy_mask(std::span<const std::uint8_t> s) {
  return std::make_shared<const std::vector<std::uint8_t>>(s.begin(), s.end());
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

void require_defined(const DiffArray& a, const char* op) {
  require(a.defined(), op, "undefined input");
}

void require_same_shape(const DiffArray& a, const DiffArray& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  require(a.shape() == b.shape(), op,
          "shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

void require_rate(double rate, const char* op) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError(std::string(op) + ": rate " + std::to_string(rate) + " outside [0, 1)");
  }
}

void check_indices(std::span<const Index> idx, Index bound, const char* op) {
  for (const Index i : idx) {
    require(i >= 0 && i < bound, op,
            "index " + std::to_string(i) + " out of range [0, " + std::to_string(bound) + ")");
  }
}

DiffArray finish(const char* op, Matrix value, std::vector<DiffArray> inputs,
                 DiffArray::BackwardFn fn) {
  if (g_finite_checks.load(std::memory_order_relaxed) && !value.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite output");
  }
  return DiffArray::from_op(std::move(value), std::move(inputs), std::move(fn));
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.rows) + ", " + std::to_string(s.cols) + ")";
}

void set_finite_checks(bool enabled) noexcept { g_finite_checks.store(enabled); }
bool finite_checks_enabled() noexcept { return g_finite_checks.load(); }

// ---------------------------------------------------------------------------
// DiffArray
// ---------------------------------------------------------------------------

DiffArray DiffArray::constant(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return DiffArray(std::move(node));
}

DiffArray DiffArray::parameter(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return DiffArray(std::move(node));
}

DiffArray DiffArray::zeros(Index rows, Index cols) { return constant(Matrix::Zero(rows, cols)); }

Shape DiffArray::shape() const { return {node_->value.rows(), node_->value.cols()}; }
Index DiffArray::rows() const { return node_->value.rows(); }
Index DiffArray::cols() const { return node_->value.cols(); }
const Matrix& DiffArray::value() const { return node_->value; }

Matrix& DiffArray::value_mut() {
  if (!node_->is_leaf) throw ShapeError("value_mut: only leaves may be modified in place");
  return node_->value;
}

bool DiffArray::requires_grad() const { return node_->requires_grad; }

bool DiffArray::has_grad() const {
  return node_->grad.rows() == node_->value.rows() && node_->grad.cols() == node_->value.cols() &&
         node_->value.size() > 0;
}

Matrix DiffArray::grad() const {
  if (has_grad()) return node_->grad;
  return Matrix::Zero(node_->value.rows(), node_->value.cols());
}

Matrix& DiffArray::grad_mut() { return node_->grad_buffer(); }

void DiffArray::zero_grad() {
  if (node_->grad.size() > 0) node_->grad.setZero();
}

double DiffArray::item() const {
  require(rows() == 1 && cols() == 1, "item", "expected 1x1, got " + to_string(shape()));
  return node_->value(0, 0);
}

DiffArray DiffArray::from_op(Matrix value, std::vector<DiffArray> inputs, BackwardFn fn) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->is_leaf = false;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const DiffArray& a) { return a.node_->requires_grad; });
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(std::move(in.node_));
    node->backward = std::move(fn);
  }
  return DiffArray(std::move(node));
}

detail::Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
  while (!pending.empty()) {
    std::shared_ptr<Node> n = std::move(pending.back());
    pending.pop_back();
    // Sole owner: steal its inputs before it dies so it has nothing to recurse into.
    if (n && n.use_count() == 1) {
      for (auto& in : n->inputs) pending.push_back(std::move(in));
      n->inputs.clear();
      n->backward = nullptr;
    }
  }
}

void DiffArray::backward() const {
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer().setOnes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->is_leaf || !n->backward) continue;
    n->grad_buffer();
    n->backward(*n);
  }
  for (detail::Node* n : order) {
    if (!n->is_leaf) n->grad.resize(0, 0);
  }
}

// ---------------------------------------------------------------------------
// Elementwise and linear algebra
// ---------------------------------------------------------------------------

DiffArray add(const DiffArray& a, const DiffArray& b) {
  require_same_shape(a, b, "add");
  return finish("add", a.value() + b.value(), {a, b}, [](detail::Node& s) {
    for (auto& in : s.inputs)
      if (in->requires_grad) in->grad_buffer() += s.grad;
  });
}

DiffArray sub(const DiffArray& a, const DiffArray& b) {
  require_same_shape(a, b, "sub");
  return finish("sub", a.value() - b.value(), {a, b}, [](detail::Node& s) {
    if (s.input(0).requires_grad) s.input(0).grad_buffer() += s.grad;
    if (s.input(1).requires_grad) s.input(1).grad_buffer() -= s.grad;
  });
}

DiffArray mul(const DiffArray& a, const DiffArray& b) {
  require_same_shape(a, b, "mul");
  return finish("mul", a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& s) {
    auto& x = s.input(0);
    auto& y = s.input(1);
    if (x.requires_grad) x.grad_buffer() += s.grad.cwiseProduct(y.value);
    if (y.requires_grad) y.grad_buffer() += s.grad.cwiseProduct(x.value);
  });
}

DiffArray scale(const DiffArray& a, double factor) {
  require_defined(a, "scale");
  return finish("scale", a.value() * factor, {a}, [factor](detail::Node& s) {
    s.input(0).grad_buffer() += s.grad * factor;
  });
}

DiffArray add_row(const DiffArray& a, const DiffArray& row) {
  require_defined(a, "add_row");
  require_defined(row, "add_row");
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
          "row " + to_string(row.shape()) + " does not broadcast over " + to_string(a.shape()));
  Matrix out = a.value().rowwise() + row.value().row(0);
  return finish("add_row", std::move(out), {a, row}, [](detail::Node& s) {
    if (s.input(0).requires_grad) s.input(0).grad_buffer() += s.grad;
    if (s.input(1).requires_grad) s.input(1).grad_buffer() += s.grad.colwise().sum();
  });
}

DiffArray matmul(const DiffArray& a, const DiffArray& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require(a.cols() == b.rows(), "matmul",
          "inner dimensions differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  Matrix out = a.value() * b.value();
  return finish("matmul", std::move(out), {a, b}, [](detail::Node& s) {
    auto& x = s.input(0);
    auto& y = s.input(1);
    if (x.requires_grad) x.grad_buffer().noalias() += s.grad * y.value.transpose();
    if (y.requires_grad) y.grad_buffer().noalias() += x.value.transpose() * s.grad;
  });
}

DiffArray matmul_nt(const DiffArray& a, const DiffArray& b) {
  require_defined(a, "matmul_nt");
  require_defined(b, "matmul_nt");
  require(a.cols() == b.cols(), "matmul_nt",
          "column counts differ: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Matrix out = a.value() * b.value().transpose();
  return finish("matmul_nt", std::move(out), {a, b}, [](detail::Node& s) {
    auto& x = s.input(0);
    auto& y = s.input(1);
    if (x.requires_grad) x.grad_buffer().noalias() += s.grad * y.value;
    if (y.requires_grad) y.grad_buffer().noalias() += s.grad.transpose() * x.value;
  });
}

DiffArray dense(const DiffArray& x, const DiffArray& w, const DiffArray& b) {
  require_defined(x, "dense");
  require_defined(w, "dense");
  require(x.cols() == w.rows(), "dense",
          "input " + to_string(x.shape()) + " does not match weight " + to_string(w.shape()));
  Matrix out(x.rows(), w.cols());
  out.noalias() = x.value() * w.value();
  if (!b.defined()) {
    return finish("dense", std::move(out), {x, w}, [](detail::Node& s) {
      auto& in = s.input(0);
      auto& wt = s.input(1);
      if (in.requires_grad) in.grad_buffer().noalias() += s.grad * wt.value.transpose();
      if (wt.requires_grad) wt.grad_buffer().noalias() += in.value.transpose() * s.grad;
    });
  }
  require(b.rows() == 1 && b.cols() == w.cols(), "dense",
          "bias " + to_string(b.shape()) + " does not match weight " + to_string(w.shape()));
  out.rowwise() += b.value().row(0);
  return finish("dense", std::move(out), {x, w, b}, [](detail::Node& s) {
    auto& in = s.input(0);
    auto& wt = s.input(1);
    auto& bias = s.input(2);
    if (in.requires_grad) in.grad_buffer().noalias() += s.grad * wt.value.transpose();
    if (wt.requires_grad) wt.grad_buffer().noalias() += in.value.transpose() * s.grad;
    if (bias.requires_grad) bias.grad_buffer() += s.grad.colwise().sum();
  });
}

DiffArray gelu(const DiffArray& x) {
  require_defined(x, "gelu");
  Matrix out = x.value().unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
  return finish("gelu", std::move(out), {x}, [](detail::Node& s) {
    auto& in = s.input(0);
    in.grad_buffer() += s.grad.cwiseProduct(in.value.unaryExpr([](double v) {
      return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
    }));
  });
}

DiffArray relu(const DiffArray& x) {
  require_defined(x, "relu");
  Matrix out = x.value().cwiseMax(0.0);
  return finish("relu", std::move(out), {x}, [](detail::Node& s) {
    auto& in = s.input(0);
    in.grad_buffer() +=
        s.grad.cwiseProduct(in.value.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  });
}

DiffArray abs(const DiffArray& x) {
  require_defined(x, "abs");
  Matrix out = x.value().cwiseAbs();
  return finish("abs", std::move(out), {x}, [](detail::Node& s) {
    auto& in = s.input(0);
    in.grad_buffer() += s.grad.cwiseProduct(in.value.unaryExpr(
        [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }));
  });
}

DiffArray layer_norm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                     double eps) {
  require_defined(x, "layer_norm");
  require(gamma.defined() && gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm",
          "gamma must be 1x" + std::to_string(x.cols()));
  require(beta.defined() && beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm",
          "beta must be 1x" + std::to_string(x.cols()));
  const Index n = x.rows();
  const Index c = x.cols();
  auto normed = std::make_shared<Matrix>(n, c);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  for (Index r = 0; r < n; ++r) {
    const auto row = x.value().row(r);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)(r) = is;
    normed->row(r) = (row.array() - mean) * is;
  }
  Matrix out = (normed->array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return finish("layer_norm", std::move(out), {x, gamma, beta},
                [normed, inv_std](detail::Node& s) {
                  auto& in = s.input(0);
                  auto& g = s.input(1);
                  auto& b = s.input(2);
                  if (g.requires_grad) {
                    g.grad_buffer() += s.grad.cwiseProduct(*normed).colwise().sum();
                  }
                  if (b.requires_grad) b.grad_buffer() += s.grad.colwise().sum();
                  if (!in.requires_grad) return;
                  Matrix& dx = in.grad_buffer();
                  for (Index r = 0; r < s.grad.rows(); ++r) {
                    const Eigen::RowVectorXd dn =
                        s.grad.row(r).cwiseProduct(g.value.row(0));
                    const double mean_dn = dn.mean();
                    const double mean_dn_n = dn.cwiseProduct(normed->row(r)).mean();
                    dx.row(r).array() +=
                        (*inv_std)(r) *
                        (dn.array() - mean_dn - normed->row(r).array() * mean_dn_n);
                  }
                });
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

namespace {

void softmax_backward(detail::Node& s) {
  auto& in = s.input(0);
  Matrix& dx = in.grad_buffer();
  for (Index r = 0; r < s.value.rows(); ++r) {
    const double dot = s.grad.row(r).dot(s.value.row(r));
    dx.row(r).array() += s.value.row(r).array() * (s.grad.row(r).array() - dot);
  }
}

}  // namespace

DiffArray softmax_rows(const DiffArray& x) {
  require_defined(x, "softmax_rows");
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.value().row(r).maxCoeff();
    out.row(r) = (x.value().row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return finish("softmax_rows", std::move(out), {x}, softmax_backward);
}

DiffArray masked_softmax(const DiffArray& x, std::span<const std::uint8_t> mask) {
  require_defined(x, "masked_softmax");
  require(static_cast<Index>(mask.size()) == x.rows() * x.cols(), "masked_softmax",
          "mask has " + std::to_string(mask.size()) + " entries for " + to_string(x.shape()));
  const Index cols = x.cols();
  Matrix out = Matrix::Zero(x.rows(), cols);
  for (Index r = 0; r < x.rows(); ++r) {
    const std::uint8_t* m = mask.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < cols; ++c)
      if (m[c]) mx = std::max(mx, x.value()(r, c));
    if (!std::isfinite(mx)) continue;
    double total = 0.0;
    for (Index c = 0; c < cols; ++c) {
      if (m[c]) {
        out(r, c) = std::exp(x.value()(r, c) - mx);
        total += out(r, c);
      }
    }
    out.row(r) /= total;
  }
  // Masked entries have p = 0, so the plain softmax backward leaves them untouched.
  return finish("masked_softmax", std::move(out), {x}, softmax_backward);
}

// ---------------------------------------------------------------------------
// Stochastic regularisers
// ---------------------------------------------------------------------------

DiffArray dropout(const DiffArray& x, double rate, RngStream& rng) {
  require_defined(x, "dropout");
  require_rate(rate, "dropout");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Matrix>(x.rows(), x.cols());
  for (Index i = 0; i < mask->size(); ++i) {
    mask->data()[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
  }
  Matrix out = x.value().cwiseProduct(*mask);
  return finish("dropout", std::move(out), {x}, [mask](detail::Node& s) {
    s.input(0).grad_buffer() += s.grad.cwiseProduct(*mask);
  });
}

DiffArray graph_dropout(const DiffArray& x, double rate, std::span<const Index> row_group,
                        Index num_groups, RngStream& rng) {
  require_defined(x, "graph_dropout");
  require_rate(rate, "graph_dropout");
  require(static_cast<Index>(row_group.size()) == x.rows(), "graph_dropout",
          "row_group has " + std::to_string(row_group.size()) + " entries for " +
              std::to_string(x.rows()) + " rows");
  check_indices(row_group, num_groups, "graph_dropout");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> group_scale(static_cast<std::size_t>(num_groups));
  for (auto& g : group_scale) g = rng.bernoulli(rate) ? 0.0 : keep_scale;
  auto row_scale = std::make_shared<Eigen::VectorXd>(x.rows());
  for (Index r = 0; r < x.rows(); ++r) (*row_scale)(r) = group_scale[row_group[r]];
  Matrix out = row_scale->asDiagonal() * x.value();
  return finish("graph_dropout", std::move(out), {x}, [row_scale](detail::Node& s) {
    s.input(0).grad_buffer() += row_scale->asDiagonal() * s.grad;
  });
}

// ---------------------------------------------------------------------------
// Indexing
// ---------------------------------------------------------------------------

DiffArray gather_rows(const DiffArray& x, std::span<const Index> index) {
  require_defined(x, "gather_rows");
  check_indices(index, x.rows(), "gather_rows");
  Matrix out(static_cast<Index>(index.size()), x.cols());
  for (std::size_t r = 0; r < index.size(); ++r) out.row(r) = x.value().row(index[r]);
  auto idx = copy_index(index);
  return finish("gather_rows", std::move(out), {x}, [idx](detail::Node& s) {
    Matrix& dx = s.input(0).grad_buffer();
    for (std::size_t r = 0; r < idx->size(); ++r) dx.row((*idx)[r]) += s.grad.row(r);
  });
}

DiffArray scatter_add_rows(const DiffArray& x, std::span<const Index> index, Index out_rows) {
  require_defined(x, "scatter_add_rows");
  require(static_cast<Index>(index.size()) == x.rows(), "scatter_add_rows",
          "index has " + std::to_string(index.size()) + " entries for " +
              std::to_string(x.rows()) + " rows");
  check_indices(index, out_rows, "scatter_add_rows");
  Matrix out = Matrix::Zero(out_rows, x.cols());
  for (std::size_t r = 0; r < index.size(); ++r) out.row(index[r]) += x.value().row(r);
  auto idx = copy_index(index);
  return finish("scatter_add_rows", std::move(out), {x}, [idx](detail::Node& s) {
    Matrix& dx = s.input(0).grad_buffer();
    for (std::size_t r = 0; r < idx->size(); ++r) dx.row(r) += s.grad.row((*idx)[r]);
  });
}

DiffArray embed(const DiffArray& table, std::span<const Index> ids) {
  return gather_rows(table, ids);
}

DiffArray concat_cols(std::span<const DiffArray> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Index rows = parts.front().rows();
  Index total = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    require(p.rows() == rows, "concat_cols",
            "row counts differ: " + std::to_string(p.rows()) + " vs " + std::to_string(rows));
    total += p.cols();
  }
  Matrix out(rows, total);
  auto offsets = std::make_shared<std::vector<Index>>();
  Index at = 0;
  for (const auto& p : parts) {
    offsets->push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return finish("concat_cols", std::move(out), std::vector<DiffArray>(parts.begin(), parts.end()),
                [offsets](detail::Node& s) {
                  for (std::size_t i = 0; i < s.inputs.size(); ++i) {
                    auto& in = *s.inputs[i];
                    if (in.requires_grad) {
                      in.grad_buffer() += s.grad.middleCols((*offsets)[i], in.value.cols());
                    }
                  }
                });
}

DiffArray slice_cols(const DiffArray& x, Index start, Index count) {
  require_defined(x, "slice_cols");
  require(start >= 0 && count >= 0 && start + count <= x.cols(), "slice_cols",
          "columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
              ") out of " + to_string(x.shape()));
  Matrix out = x.value().middleCols(start, count);
  return finish("slice_cols", std::move(out), {x}, [start, count](detail::Node& s) {
    s.input(0).grad_buffer().middleCols(start, count) += s.grad;
  });
}

DiffArray sum_all(const DiffArray& x) {
  require_defined(x, "sum_all");
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return finish("sum_all", std::move(out), {x}, [](detail::Node& s) {
    s.input(0).grad_buffer().array() += s.grad(0, 0);
  });
}

DiffArray mean_all(const DiffArray& x) {
  require_defined(x, "mean_all");
  require(x.value().size() > 0, "mean_all", "empty input");
  const double inv = 1.0 / static_cast<double>(x.value().size());
  Matrix out(1, 1);
  out(0, 0) = x.value().sum() * inv;
  return finish("mean_all", std::move(out), {x}, [inv](detail::Node& s) {
    s.input(0).grad_buffer().array() += s.grad(0, 0) * inv;
  });
}

DiffArray cross_entropy_sum(const DiffArray& logits, std::span<const Index> labels,
                            std::span<const std::uint8_t> row_mask) {
  require_defined(logits, "cross_entropy_sum");
  require(static_cast<Index>(labels.size()) == logits.rows(), "cross_entropy_sum",
          "labels/rows mismatch");
  require(row_mask.size() == labels.size(), "cross_entropy_sum", "mask/labels mismatch");
  check_indices(labels, logits.cols(), "cross_entropy_sum");
  auto probs = std::make_shared<Matrix>(Matrix::Zero(logits.rows(), logits.cols()));
  double total = 0.0;
  for (Index r = 0; r < logits.rows(); ++r) {
    if (!row_mask[r]) continue;
    const auto row = logits.value().row(r);
    const double m = row.maxCoeff();
    probs->row(r) = (row.array() - m).exp();
    const double z = probs->row(r).sum();
    probs->row(r) /= z;
    total += (m + std::log(z)) - row(labels[r]);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  auto lab = copy_index(labels);
  auto msk = copy_mask(row_mask);
  return finish("cross_entropy_sum", std::move(out), {logits},
                [probs, lab, msk](detail::Node& s) {
                  Matrix& dx = s.input(0).grad_buffer();
                  const double g = s.grad(0, 0);
                  for (Index r = 0; r < dx.rows(); ++r) {
                    if (!(*msk)[r]) continue;
                    dx.row(r) += g * probs->row(r);
                    dx(r, (*lab)[r]) -= g;
                  }
                });
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

DiffArray pairwise_distance(const DiffArray& positions, std::span<const Index> pair_i,
                            std::span<const Index> pair_j) {
  require_defined(positions, "pairwise_distance");
  require(pair_i.size() == pair_j.size(), "pairwise_distance", "pair lists differ in length");
  check_indices(pair_i, positions.rows(), "pairwise_distance");
  check_indices(pair_j, positions.rows(), "pairwise_distance");
  if (!positions.value().allFinite()) throw NumericError("pairwise_distance: non-finite positions");
  const Index p = static_cast<Index>(pair_i.size());
  Matrix out(p, 1);
  for (Index k = 0; k < p; ++k) {
    out(k, 0) = (positions.value().row(pair_i[k]) - positions.value().row(pair_j[k])).norm();
  }
  auto pi = copy_index(pair_i);
  auto pj = copy_index(pair_j);
  return finish("pairwise_distance", out, {positions}, [pi, pj](detail::Node& s) {
    auto& pos = s.input(0);
    Matrix& dp = pos.grad_buffer();
    for (std::size_t k = 0; k < pi->size(); ++k) {
      const double d = s.value(static_cast<Index>(k), 0);
      if (d == 0.0) continue;
      const Eigen::RowVectorXd dir =
          (pos.value.row((*pi)[k]) - pos.value.row((*pj)[k])) * (s.grad(k, 0) / d);
      dp.row((*pi)[k]) += dir;
      dp.row((*pj)[k]) -= dir;
    }
  });
}

DiffArray gaussian_kernels(const DiffArray& dist, const DiffArray& mu, const DiffArray& sigma,
                           double min_sigma) {
  require_defined(dist, "gaussian_kernels");
  require(dist.cols() == 1, "gaussian_kernels", "dist must be a column");
  require(mu.defined() && mu.rows() == 1, "gaussian_kernels", "mu must be 1xK");
  require_same_shape(mu, sigma, "gaussian_kernels");
  const Index p = dist.rows();
  const Index k = mu.cols();
  auto s_eff = std::make_shared<Eigen::RowVectorXd>(k);
  auto s_grad_sign = std::make_shared<Eigen::RowVectorXd>(k);
  for (Index c = 0; c < k; ++c) {
    const double sg = sigma.value()(0, c);
    const double a = std::abs(sg);
    (*s_eff)(c) = std::max(a, min_sigma);
    (*s_grad_sign)(c) = a > min_sigma ? (sg > 0.0 ? 1.0 : -1.0) : 0.0;
  }
  auto z = std::make_shared<Matrix>(p, k);
  Matrix out(p, k);
  for (Index r = 0; r < p; ++r) {
    const double d = dist.value()(r, 0);
    for (Index c = 0; c < k; ++c) {
      const double s = (*s_eff)(c);
      const double zz = (d - mu.value()(0, c)) / s;
      (*z)(r, c) = zz;
      out(r, c) = -kInvSqrt2Pi / s * std::exp(-0.5 * zz * zz);
    }
  }
  return finish("gaussian_kernels", std::move(out), {dist, mu, sigma},
                [z, s_eff, s_grad_sign](detail::Node& s) {
                  auto& d = s.input(0);
                  auto& m = s.input(1);
                  auto& sg = s.input(2);
                  // dψ/dd = −ψ z/s, dψ/dμ = ψ z/s, dψ/ds = ψ (z² − 1)/s
                  const Matrix gpsi = s.grad.cwiseProduct(s.value);
                  const Matrix gz = gpsi.cwiseProduct(*z);
                  const Eigen::RowVectorXd inv_s = s_eff->cwiseInverse();
                  if (d.requires_grad) {
                    d.grad_buffer().col(0) -= (gz.array().rowwise() * inv_s.array()).rowwise().sum().matrix();
                  }
                  if (m.requires_grad) {
                    m.grad_buffer().row(0) += (gz.colwise().sum().array() * inv_s.array()).matrix();
                  }
                  if (sg.requires_grad) {
                    const Eigen::RowVectorXd ds =
                        (gz.cwiseProduct(*z) - gpsi).colwise().sum().cwiseProduct(inv_s);
                    sg.grad_buffer().row(0) += ds.cwiseProduct(*s_grad_sign);
                  }
                });
}

DiffArray pair_square(const DiffArray& pair_values, Index column, std::span<const Index> pair_i,
                      std::span<const Index> pair_j, Index n) {
  require_defined(pair_values, "pair_square");
  require(pair_i.size() == pair_j.size() &&
              static_cast<Index>(pair_i.size()) == pair_values.rows(),
          "pair_square", "pair lists must match the value rows");
  require(column >= 0 && column < pair_values.cols(), "pair_square", "column out of range");
  check_indices(pair_i, n, "pair_square");
  check_indices(pair_j, n, "pair_square");
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < pair_i.size(); ++k) {
    out(pair_i[k], pair_j[k]) = pair_values.value()(static_cast<Index>(k), column);
  }
  auto pi = copy_index(pair_i);
  auto pj = copy_index(pair_j);
  return finish("pair_square", std::move(out), {pair_values}, [pi, pj, column](detail::Node& s) {
    Matrix& dv = s.input(0).grad_buffer();
    for (std::size_t k = 0; k < pi->size(); ++k) {
      dv(static_cast<Index>(k), column) += s.grad((*pi)[k], (*pj)[k]);
    }
  });
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

GradCheckReport grad_check(const std::function<DiffArray()>& f,
                           std::span<const NamedArray> params, const GradCheckOptions& options) {
  auto evaluate = [&f]() {
    const DiffArray out = f();
    const double v = out.item();
    if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
    return v;
  };

  std::vector<NamedArray> leaves(params.begin(), params.end());
  for (auto& p : leaves) p.array.zero_grad();
  {
    const DiffArray out = f();
    if (!std::isfinite(out.item())) throw NumericError("grad_check: objective is not finite");
    out.backward();
  }

  GradCheckReport report;
  RngStream rng(options.seed, 0x67726164ULL);
  for (auto& p : leaves) {
    GradCheckTensorReport tr;
    tr.name = p.name;
    const Matrix analytic = p.array.grad();
    const Index size = p.array.value().size();
    std::vector<Index> coords;
    if (size <= options.samples_per_tensor) {
      coords.resize(static_cast<std::size_t>(size));
      for (Index i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      // Distinct coordinates: partial Fisher-Yates over all indices.
      std::vector<Index> all(static_cast<std::size_t>(size));
      for (Index i = 0; i < size; ++i) all[static_cast<std::size_t>(i)] = i;
      for (Index i = 0; i < options.samples_per_tensor; ++i) {
        const auto j = i + static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(size - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        coords.push_back(all[static_cast<std::size_t>(i)]);
      }
    }
    for (const Index c : coords) {
      double& slot = p.array.value_mut().data()[c];
      const double saved = slot;
      const double h = options.step;
      auto at = [&](double offset) {
        slot = saved + offset;
        return evaluate();
      };
      double numeric = 0.0;
      if (options.five_point) {
        numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      } else {
        numeric = (at(h) - at(-h)) / (2.0 * h);
      }
      slot = saved;
      const double a = analytic.data()[c];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double err = std::abs(a - numeric) / denom;
      if (err > tr.max_rel_error || tr.worst_index < 0) {
        tr.max_rel_error = err;
        tr.worst_index = c;
        tr.worst_analytic = a;
        tr.worst_numeric = numeric;
      }
      ++tr.coords_checked;
    }
    report.coords_checked += tr.coords_checked;
    report.max_rel_error = std::max(report.max_rel_error, tr.max_rel_error);
    report.tensors.push_back(std::move(tr));
  }
  for (auto& p : leaves) p.array.zero_grad();
  return report;
}

}  // namespace graphmix

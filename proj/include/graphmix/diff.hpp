// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal reverse-mode differentiable array engine. Every array is a dense
// row-major matrix of doubles; the op set below is exactly what the model
// needs. Gradients accumulate into leaf parameters on backward().

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphmix/rng.hpp"

namespace graphmix {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape {
  Index rows = 0;
  Index cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

namespace detail {
struct Node;
}  // namespace detail

/// Enables the after-every-op finiteness check. Defaults to on in debug builds.
void set_finite_checks(bool enabled) noexcept;
bool finite_checks_enabled() noexcept;

class DiffArray {
 public:
  using BackwardFn = std::function<void(detail::Node& self)>;

  DiffArray() = default;

  /// Leaf that never receives a gradient.
  static DiffArray constant(Matrix value);
  /// Leaf whose gradient accumulates across backward() calls until zero_grad().
  static DiffArray parameter(Matrix value);
  static DiffArray zeros(Index rows, Index cols);

  bool defined() const noexcept { return node_ != nullptr; }
  Shape shape() const;
  Index rows() const;
  Index cols() const;
  const Matrix& value() const;
  /// Mutable access for leaves (optimizer updates, finite differences).
  Matrix& value_mut();
  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient buffer; zeros of the value's shape when nothing has accumulated.
  Matrix grad() const;
  Matrix& grad_mut();
  void zero_grad();
  double item() const;

  /// Reverse sweep from this array, seeding its gradient with ones.
  void backward() const;

  /// Builds a non-leaf. `fn` reads self.grad and accumulates into the inputs.
  static DiffArray from_op(Matrix value, std::vector<DiffArray> inputs, BackwardFn fn);

  detail::Node* node() const noexcept { return node_.get(); }

 private:
  explicit DiffArray(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  DiffArray::BackwardFn backward;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  /// Unlinks long tapes iteratively so destruction does not recurse.
  ~Node();

  Matrix& grad_buffer() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
    return grad;
  }
  Node& input(std::size_t i) { return *inputs[i]; }
};
}  // namespace detail

// ---------------------------------------------------------------------------
// Ops. Shape mismatches throw ShapeError; out-of-range rates throw ConfigError.
// ---------------------------------------------------------------------------

DiffArray add(const DiffArray& a, const DiffArray& b);
DiffArray sub(const DiffArray& a, const DiffArray& b);
DiffArray mul(const DiffArray& a, const DiffArray& b);
DiffArray scale(const DiffArray& a, double s);
/// a (n×c) + row (1×c) broadcast over rows.
DiffArray add_row(const DiffArray& a, const DiffArray& row);
DiffArray matmul(const DiffArray& a, const DiffArray& b);
/// a · bᵀ
DiffArray matmul_nt(const DiffArray& a, const DiffArray& b);
/// x·w + b. `b` may be undefined.
DiffArray dense(const DiffArray& x, const DiffArray& w, const DiffArray& b);

DiffArray gelu(const DiffArray& x);
DiffArray relu(const DiffArray& x);
DiffArray abs(const DiffArray& x);

/// Row-wise normalisation to zero mean, unit variance, then gamma/beta affine.
DiffArray layer_norm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                     double eps);

DiffArray softmax_rows(const DiffArray& x);
/// Softmax over entries whose mask byte is non-zero (row-major, rows*cols bytes).
/// Masked entries are exactly 0; a fully masked row yields all zeros.
DiffArray masked_softmax(const DiffArray& x, std::span<const std::uint8_t> mask);

/// Inverted dropout: each entry zeroed with probability `rate`, survivors
/// scaled by 1/(1-rate). rate == 0 returns `x` unchanged.
DiffArray dropout(const DiffArray& x, double rate, RngStream& rng);
/// Drops whole row groups together: one Bernoulli keep draw per group id,
/// broadcast over the group's rows, survivors scaled by 1/(1-rate).
DiffArray graph_dropout(const DiffArray& x, double rate, std::span<const Index> row_group,
                        Index num_groups, RngStream& rng);

/// out[r] = x[index[r]]
DiffArray gather_rows(const DiffArray& x, std::span<const Index> index);
/// out[index[r]] += x[r]; out has `out_rows` rows.
DiffArray scatter_add_rows(const DiffArray& x, std::span<const Index> index, Index out_rows);
/// Row lookup in a learnable table.
DiffArray embed(const DiffArray& table, std::span<const Index> ids);

DiffArray concat_cols(std::span<const DiffArray> parts);
DiffArray slice_cols(const DiffArray& x, Index start, Index count);

DiffArray sum_all(const DiffArray& x);
DiffArray mean_all(const DiffArray& x);

/// Σ over rows with a non-zero `row_mask` of −log softmax(logits[r])[labels[r]]; 1×1.
DiffArray cross_entropy_sum(const DiffArray& logits, std::span<const Index> labels,
                            std::span<const std::uint8_t> row_mask);

/// ‖p[pair_i[k]] − p[pair_j[k]]‖ as a P×1 column. The gradient of a zero
/// distance with respect to positions is defined as 0.
DiffArray pairwise_distance(const DiffArray& positions, std::span<const Index> pair_i,
                            std::span<const Index> pair_j);

/// ψ[k] = −1/(√(2π)|σ_k|) · exp(−½((d − μ_k)/|σ_k|)²), with |σ_k| clamped below by
/// `min_sigma`. dist is P×1, mu and sigma are 1×K; result is P×K.
DiffArray gaussian_kernels(const DiffArray& dist, const DiffArray& mu, const DiffArray& sigma,
                           double min_sigma);

/// Scatters column `column` of a P×H pair table into an n×n matrix at
/// (pair_i[k], pair_j[k]); untouched entries are 0.
DiffArray pair_square(const DiffArray& pair_values, Index column, std::span<const Index> pair_i,
                      std::span<const Index> pair_j, Index n);

// ---------------------------------------------------------------------------
// Finite-difference checking.
// ---------------------------------------------------------------------------

struct NamedArray {
  std::string name;
  DiffArray array;
};

struct GradCheckOptions {
  double step = 5e-4;
  /// Fourth-order stencil (f(x±2h), f(x±h)); the plain central difference
  /// otherwise. The higher order lets the step stay large enough that
  /// cancellation does not swamp small gradients.
  bool five_point = true;
  /// Coordinates sampled per tensor; tensors with fewer entries are checked fully.
  Index samples_per_tensor = 200;
  /// Denominator floor: err = |g_ad − g_fd| / max(|g_ad|, |g_fd|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckTensorReport {
  std::string name;
  Index coords_checked = 0;
  double max_rel_error = 0.0;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  Index coords_checked = 0;
  std::vector<GradCheckTensorReport> tensors;
};

/// Compares reverse-mode gradients of the scalar `f` against finite
/// differences on a sampled subset of every parameter's coordinates.
/// `f` must be deterministic. Non-finite values of `f` raise NumericError.
GradCheckReport grad_check(const std::function<DiffArray()>& f,
                           std::span<const NamedArray> params,
                           const GradCheckOptions& options = {});

}  // namespace graphmix

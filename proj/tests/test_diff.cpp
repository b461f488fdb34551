// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "graphmix/diff.hpp"
#include "graphmix/errors.hpp"
#include "graphmix/rng.hpp"

using namespace graphmix;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  RngStream rng(seed, 17);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

DiffArray param(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  return DiffArray::parameter(random_matrix(r, c, seed, scale));
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
DiffArray probe(const DiffArray& y, std::uint64_t seed) {
  return sum_all(mul(y, DiffArray::constant(random_matrix(y.rows(), y.cols(), seed))));
}

double check(const std::function<DiffArray()>& f, std::vector<NamedArray> params) {
  GradCheckOptions o;
  o.step = 1e-5;
  return grad_check(f, params, o).max_rel_error;
}

}  // namespace

TEST(DiffOps, MatmulMatchesLoops) {
  const Matrix a = random_matrix(3, 4, 1), b = random_matrix(4, 5, 2);
  const Matrix y = matmul(DiffArray::constant(a), DiffArray::constant(b)).value();
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 5; ++j) {
      double s = 0.0;
      for (Index k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(y(i, j), s, 1e-14);
    }
  }
  const Matrix nt = matmul_nt(DiffArray::constant(a), DiffArray::constant(a)).value();
  EXPECT_LT((nt - a * a.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DiffOps, GeluKnownValues) {
  Matrix x(1, 3);
  x << 0.0, 1.0, -2.0;
  const Matrix y = gelu(DiffArray::constant(x)).value();
  EXPECT_DOUBLE_EQ(y(0, 0), 0.0);
  EXPECT_NEAR(y(0, 1), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(y(0, 2), -0.04550026389635842, 1e-15);
}

TEST(DiffOps, LayerNormRowsAreStandardised) {
  const DiffArray x = DiffArray::constant(random_matrix(6, 9, 3, 4.0));
  const DiffArray g = DiffArray::constant(Matrix::Ones(1, 9));
  const DiffArray b = DiffArray::constant(Matrix::Zero(1, 9));
  const Matrix y = layer_norm(x, g, b, 1e-12).value();
  for (Index r = 0; r < y.rows(); ++r) {
    const double mean = y.row(r).mean();
    const double var = (y.row(r).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(DiffOps, MaskedSoftmaxRowsAndZeros) {
  Matrix x = random_matrix(3, 3, 4);
  const std::vector<std::uint8_t> mask = {1, 1, 0, 0, 1, 0, 0, 0, 0};
  const Matrix y = masked_softmax(DiffArray::constant(x), mask).value();
  EXPECT_NEAR(y.row(0).sum(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(y(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(y(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(y.row(2).cwiseAbs().sum(), 0.0);
  const double e0 = std::exp(x(0, 0)), e1 = std::exp(x(0, 1));
  EXPECT_NEAR(y(0, 0), e0 / (e0 + e1), 1e-15);
}

TEST(DiffOps, GatherScatterAreAdjoint) {
  const Matrix x = random_matrix(5, 3, 5), y = random_matrix(4, 3, 6);
  const std::vector<Index> idx = {2, 0, 2, 3, 1};
  const Matrix s = scatter_add_rows(DiffArray::constant(x), idx, 4).value();
  const Matrix g = gather_rows(DiffArray::constant(y), idx).value();
  EXPECT_NEAR((s.array() * y.array()).sum(), (x.array() * g.array()).sum(), 1e-12);
}

TEST(DiffOps, CrossEntropyUniformLogitsIsLogV) {
  const DiffArray logits = DiffArray::constant(Matrix::Zero(4, 7));
  const std::vector<Index> labels = {0, 3, 6, 2};
  const std::vector<std::uint8_t> rows = {1, 1, 0, 1};
  EXPECT_NEAR(cross_entropy_sum(logits, labels, rows).item(), 3.0 * std::log(7.0), 1e-14);
}

TEST(DiffOps, DropoutRateZeroIsIdentityAndRateIsRespected) {
  RngStream rng(1, 2);
  const DiffArray x = DiffArray::constant(Matrix::Ones(200, 500));
  EXPECT_EQ(dropout(x, 0.0, rng).node(), x.node());
  const Matrix y = dropout(x, 0.3, rng).value();
  const double zeros = static_cast<double>((y.array() == 0.0).count()) / static_cast<double>(y.size());
  EXPECT_NEAR(zeros, 0.3, 0.005);
  EXPECT_NEAR(y.mean(), 1.0, 0.01);
  EXPECT_THROW(dropout(x, 1.0, rng), ConfigError);
  EXPECT_THROW(dropout(x, -0.1, rng), ConfigError);
}

TEST(DiffOps, GraphDropoutDropsWholeGroups) {
  RngStream rng(3, 4);
  const std::vector<Index> group = {0, 0, 1, 1, 1, 2};
  int dropped = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix y = graph_dropout(DiffArray::constant(Matrix::Ones(6, 4)), 0.5, group, 3, rng).value();
    for (Index r = 0; r < 6; ++r) {
      const double v = y(r, 0);
      EXPECT_TRUE(v == 0.0 || v == 2.0);
      EXPECT_EQ(y.row(r).minCoeff(), y.row(r).maxCoeff());
      if (r > 0 && group[r] == group[r - 1]) EXPECT_EQ(v, y(r - 1, 0));
    }
    dropped += y(0, 0) == 0.0;
  }
  EXPECT_GT(dropped, 60);
  EXPECT_LT(dropped, 140);
}

TEST(DiffOps, ShapeErrors) {
  const DiffArray a = param(2, 3, 1), b = param(3, 2, 2);
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(slice_cols(a, 2, 2), ShapeError);
  const std::vector<Index> bad = {5};
  EXPECT_THROW(gather_rows(a, bad), ShapeError);
}

TEST(DiffOps, PairwiseDistanceZeroHasZeroGradient) {
  Matrix p(2, 3);
  p << 0, 0, 0, 3, 4, 0;
  const DiffArray pos = DiffArray::parameter(p);
  const std::vector<Index> pi = {0, 0, 1}, pj = {0, 1, 0};
  const DiffArray d = pairwise_distance(pos, pi, pj);
  EXPECT_DOUBLE_EQ(d.value()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.value()(1, 0), 5.0);
  sum_all(slice_cols(d, 0, 1)).backward();
  EXPECT_TRUE(pos.grad().allFinite());
}

TEST(DiffOps, GaussianKernelValue) {
  Matrix d(1, 1), mu(1, 2), s(1, 2);
  d << 1.5;
  mu << 1.0, 2.0;
  s << 0.5, -0.25;
  const Matrix psi = gaussian_kernels(DiffArray::constant(d), DiffArray::constant(mu),
                                      DiffArray::constant(s), 1e-3)
                         .value();
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  EXPECT_NEAR(psi(0, 0), -c / 0.5 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(psi(0, 1), -c / 0.25 * std::exp(-2.0), 1e-15);
}

TEST(DiffGrad, ElementwiseAndLinear) {
  auto a = param(3, 4, 10), b = param(3, 4, 11), w = param(4, 5, 12), bias = param(1, 5, 13);
  auto f = [&] {
    DiffArray h = add(mul(a, b), sub(scale(a, 0.7), b));
    return probe(gelu(dense(h, w, bias)), 14);
  };
  EXPECT_LT(check(f, {{"a", a}, {"b", b}, {"w", w}, {"bias", bias}}), 1e-6);
}

TEST(DiffGrad, ReluAbsAwayFromKinks) {
  Matrix v = random_matrix(4, 4, 20);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] += v.data()[i] > 0 ? 0.1 : -0.1;
  auto x = DiffArray::parameter(v);
  auto f = [&] { return probe(add(relu(x), abs(scale(x, 2.0))), 21); };
  EXPECT_LT(check(f, {{"x", x}}), 1e-6);
}

TEST(DiffGrad, LayerNormAndSoftmax) {
  auto x = param(4, 6, 30), g = param(1, 6, 31), b = param(1, 6, 32);
  const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  auto y = param(4, 4, 33);
  auto f = [&] {
    return add(probe(layer_norm(x, g, b, 1e-5), 34),
               add(probe(softmax_rows(x), 35), probe(masked_softmax(y, mask), 36)));
  };
  EXPECT_LT(check(f, {{"x", x}, {"g", g}, {"b", b}, {"y", y}}), 1e-6);
}

TEST(DiffGrad, IndexingOps) {
  auto x = param(5, 3, 40), table = param(6, 3, 41);
  const std::vector<Index> idx = {4, 1, 1, 0}, ids = {5, 0, 5}, into = {0, 2, 2, 1, 0};
  auto f = [&] {
    std::vector<DiffArray> parts = {gather_rows(x, idx), slice_cols(gather_rows(x, idx), 1, 2)};
    DiffArray c = concat_cols(parts);
    return add(add(probe(c, 42), probe(embed(table, ids), 43)),
               add(probe(scatter_add_rows(x, into, 3), 44), mean_all(mul(x, x))));
  };
  EXPECT_LT(check(f, {{"x", x}, {"table", table}}), 1e-6);
}

TEST(DiffGrad, CrossEntropy) {
  auto logits = param(5, 4, 50);
  const std::vector<Index> labels = {0, 3, 2, 1, 1};
  const std::vector<std::uint8_t> rows = {1, 0, 1, 1, 1};
  auto f = [&] { return cross_entropy_sum(logits, labels, rows); };
  EXPECT_LT(check(f, {{"logits", logits}}), 1e-6);
}

TEST(DiffGrad, GeometryOps) {
  auto pos = param(3, 3, 60), mu = param(1, 4, 61), sigma = DiffArray::parameter(
                                                          Matrix::Constant(1, 4, 0.8));
  const std::vector<Index> pi = {0, 0, 1, 2, 1}, pj = {1, 2, 2, 0, 0};
  auto bias = param(5, 2, 62);
  auto f = [&] {
    DiffArray k = gaussian_kernels(pairwise_distance(pos, pi, pj), mu, sigma, 1e-3);
    return add(probe(k, 63), probe(pair_square(bias, 1, pi, pj, 3), 64));
  };
  EXPECT_LT(check(f, {{"pos", pos}, {"mu", mu}, {"sigma", sigma}, {"bias", bias}}), 1e-6);
}

TEST(DiffEngine, GradientsAccumulateAcrossBackwardCalls) {
  auto x = param(2, 2, 70);
  probe(x, 71).backward();
  const Matrix once = x.grad();
  probe(x, 71).backward();
  EXPECT_LT((x.grad() - 2.0 * once).cwiseAbs().maxCoeff(), 1e-15);
  x.zero_grad();
  EXPECT_EQ(x.grad().cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiffEngine, SharedSubexpressionGetsBothPaths) {
  auto x = DiffArray::parameter(Matrix::Constant(1, 1, 3.0));
  const DiffArray y = mul(x, x);
  add(y, y).backward();  // d/dx 2x² = 4x
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 12.0);
}

TEST(DiffEngine, DeepChainDoesNotRecurse) {
  auto x = DiffArray::parameter(Matrix::Ones(1, 1));
  DiffArray y = x;
  for (int i = 0; i < 200000; ++i) y = scale(y, 1.0);
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 1.0);
}

TEST(DiffEngine, FiniteChecksCatchNaN) {
  const bool before = finite_checks_enabled();
  set_finite_checks(true);
  Matrix m = Matrix::Ones(1, 2);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gelu(DiffArray::constant(m)), NumericError);
  set_finite_checks(before);
}

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <algorithm>
#include <cmath>

#include "graphmix/rng.hpp"
#include "graphmix/training.hpp"
#include "test_util.hpp"

namespace graphmix::testing {

GraphFeatures permute_features(const GraphFeatures& f, const std::vector<std::int32_t>& perm) {
  GraphFeatures out = f;
  const auto n = static_cast<Index>(perm.size());
  for (Index i = 0; i < n; ++i) {
    out.spectral.eig_vectors.row(perm[i]) = f.spectral.eig_vectors.row(i);
    out.random_walk.row(perm[i]) = f.random_walk.row(i);
    out.degree[perm[i]] = f.degree[i];
    for (Index j = 0; j < n; ++j) out.spd(perm[i], perm[j]) = f.spd(i, j);
  }
  return out;
}

std::vector<std::int32_t> random_permutation(std::int32_t n, std::uint64_t seed) {
  std::vector<std::int32_t> p(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) p[i] = i;
  RngStream rng(seed, 0x7065726d);
  shuffle(p, rng);
  return p;
}

namespace {

ForwardOutput run(const HybridModel& model, const PackedBatch& batch, MaskingGroup group,
                  bool record = false) {
  ForwardOptions o;
  o.group = group;
  o.record_layers = record;
  return model.forward(batch, o);
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

PermutationGap permutation_gap(const HybridModel& model, const MolecularGraph& g,
                               const GraphFeatures& f, const std::vector<std::int32_t>& perm,
                               MaskingGroup group) {
  const MolecularGraph pg = permute_nodes(g, perm);
  const GraphFeatures pf = permute_features(f, perm);
  const std::int32_t spd = model.config().max_spd;
  const ForwardOutput a = run(model, single_batch(g, f, spd), group, true);
  const ForwardOutput b = run(model, single_batch(pg, pf, spd), group, true);
  PermutationGap gap;
  for (std::size_t l = 0; l < a.layer_nodes.size(); ++l) {
    const Matrix& xa = a.layer_nodes[l].value();
    const Matrix& xb = b.layer_nodes[l].value();
    for (Index i = 0; i < xa.rows(); ++i) {
      gap.layer_nodes = std::max(gap.layer_nodes, max_abs(xa.row(i) - xb.row(perm[i])));
    }
  }
  // permute_nodes keeps the edge order.
  gap.edges = max_abs(a.E.value() - b.E.value());
  gap.prediction = max_abs(a.prediction.value() - b.prediction.value());
  return gap;
}

double rigid_motion_gap(const HybridModel& model, const MolecularGraph& g, const GraphFeatures& f,
                        std::uint64_t seed) {
  RngStream rng(seed, 0x726f74);
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(2.0 * M_PI * rng.uniform(), axis.normalized()).toRotationMatrix();
  const Eigen::RowVector3d shift(5.0 * rng.normal(), 5.0 * rng.normal(), 5.0 * rng.normal());
  MolecularGraph moved = g;
  Positions p = *g.positions * rot.transpose();
  p.rowwise() += shift;
  moved.positions = p;
  const std::int32_t spd = model.config().max_spd;
  const Matrix a = run(model, single_batch(g, f, spd), MaskingGroup::NoMask).prediction.value();
  const Matrix b = run(model, single_batch(moved, f, spd), MaskingGroup::NoMask).prediction.value();
  return max_abs(a - b);
}

SpatialMaskCheck spatial_mask_independence(const HybridModel& model, const MolecularGraph& g,
                                           const GraphFeatures& f, std::uint64_t seed) {
  RngStream rng(seed, 0x6d61736b);
  MolecularGraph moved = g;
  Positions p = *g.positions;
  for (Index i = 0; i < p.size(); ++i) p.data()[i] += 3.0 * rng.normal();
  moved.positions = p;
  MolecularGraph absent = g;
  absent.positions.reset();
  const std::int32_t spd = model.config().max_spd;
  const PackedBatch b0 = single_batch(g, f, spd);
  const PackedBatch b1 = single_batch(moved, f, spd);
  const PackedBatch b2 = single_batch(absent, f, spd);
  const ForwardOutput o0 = run(model, b0, MaskingGroup::MaskSpatial);
  const ForwardOutput o1 = run(model, b1, MaskingGroup::MaskSpatial);
  const ForwardOutput o2 = run(model, b2, MaskingGroup::MaskSpatial);
  SpatialMaskCheck c;
  c.max_change = std::max({max_abs(o0.prediction.value() - o1.prediction.value()),
                           max_abs(o0.prediction.value() - o2.prediction.value()),
                           max_abs(o0.X.value() - o1.X.value()),
                           max_abs(o0.X.value() - o2.X.value())});
  c.position_reads = b0.position_reads() + b1.position_reads() + b2.position_reads();
  return c;
}

double pack_vs_single_gap(const HybridModel& model, const std::vector<const MolecularGraph*>& graphs,
                          const std::vector<const GraphFeatures*>& features, MaskingGroup group,
                          bool pad) {
  const std::int32_t spd = model.config().max_spd;
  const Matrix packed = run(model, batch_of(graphs, features, spd, pad), group).prediction.value();
  double gap = 0.0;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const Matrix alone =
        run(model, single_batch(*graphs[k], *features[k], spd), group).prediction.value();
    gap = std::max(gap, std::abs(packed(static_cast<Index>(k), 0) - alone(0, 0)));
  }
  return gap;
}

GradCheckReport model_grad_check(const HybridModel& model, const MolecularGraph& g,
                                 const GraphFeatures& f, const GradCheckOptions& options) {
  const PackedBatch batch = single_batch(g, f, model.config().max_spd);
  auto loss = [&] {
    const ForwardOutput out = run(model, batch, MaskingGroup::NoMask);
    return composite_loss(out, batch, {1.0, 1.2, 1.2}).total;
  };
  std::vector<NamedArray> params;
  for (const auto& name : model.params().names()) params.push_back({name, model.params().get(name)});
  return grad_check(loss, params, options);
}

IntMatrix floyd_warshall(const MolecularGraph& g) {
  const int n = g.num_nodes;
  const int inf = 1 << 20;
  IntMatrix d = IntMatrix::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (auto e : g.edges) d(e[0], e[1]) = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

void jacobi_eigen(Matrix a, std::vector<double>* values, Matrix* vectors) {
  const Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) < a(y, y); });
  values->clear();
  *vectors = Matrix(n, n);
  for (Index k = 0; k < n; ++k) {
    values->push_back(a(order[k], order[k]));
    vectors->col(k) = v.col(order[k]);
  }
}

Matrix laplacian(const MolecularGraph& g) {
  Matrix a = adjacency_matrix(g);
  Matrix l = -a;
  for (Index i = 0; i < a.rows(); ++i) l(i, i) += a.row(i).sum();
  return l;
}


Matrix random_walk_oracle(const MolecularGraph& g, std::int32_t k) {
  const Matrix a = adjacency_matrix(g);
  const Index n = a.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg > 0) p.row(i) = a.row(i) / deg;
  }
  Matrix out = Matrix::Zero(n, k);
  Matrix power = Matrix::Identity(n, n);
  for (std::int32_t s = 0; s < k; ++s) {
    power = power * p;
    out.col(s) = power.diagonal();
  }
  return out;
}

}  // namespace graphmix::testing

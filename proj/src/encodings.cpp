// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/encodings.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "graphmix/errors.hpp"

namespace graphmix {

Matrix adjacency_matrix(const MolecularGraph& g) {
  Matrix a = Matrix::Zero(g.num_nodes, g.num_nodes);
  for (const auto& e : g.edges) {
    a(e[0], e[1]) = 1.0;
    a(e[1], e[0]) = 1.0;
  }
  return a;
}

SpectralFeatures laplacian_features(const MolecularGraph& g, std::int32_t k_lap,
                                    std::size_t graph_index) {
  const Index n = g.num_nodes;
  SpectralFeatures out;
  out.eig_vectors = Matrix::Zero(n, k_lap);
  out.eig_values = Matrix::Zero(1, k_lap);
  if (n < 2) return out;

  const Matrix a = adjacency_matrix(g);
  Matrix lap = -a;
  lap.diagonal() += a.rowwise().sum();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(lap),
                                                         Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericError("graph " + std::to_string(graph_index) +
                       ": Laplacian eigensolver did not converge");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const Index keep = std::min<Index>(n - 1, k_lap);
  for (Index j = 0; j < keep; ++j) {
    const double lambda = values(j + 1);
    Eigen::VectorXd v = vectors.col(j + 1);
    const double residual = (lap * v - lambda * v).cwiseAbs().maxCoeff();
    if (residual > 1e-8 * std::max(1.0, std::abs(lambda))) {
      throw NumericError("graph " + std::to_string(graph_index) + ": eigenpair " +
                         std::to_string(j + 1) + " residual " + std::to_string(residual));
    }
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-10) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    out.eig_vectors.col(j) = v;
    out.eig_values(0, j) = lambda;
  }
  const double norm = out.eig_values.norm();
  if (norm > 0.0) out.eig_values /= norm;
  return out;
}

Matrix random_walk_features(const MolecularGraph& g, std::int32_t k_rw) {
  const Index n = g.num_nodes;
  Matrix p = adjacency_matrix(g);
  for (Index i = 0; i < n; ++i) {
    const double d = p.row(i).sum();
    if (d > 0.0) p.row(i) /= d;
  }
  Matrix out(n, k_rw);
  Matrix power = p;
  for (std::int32_t s = 0; s < k_rw; ++s) {
    if (s > 0) power = power * p;
    out.col(s) = power.diagonal();
  }
  return out;
}

IntMatrix spd_map(const MolecularGraph& g, std::int32_t max_spd) {
  if (max_spd < 1) throw ConfigError("max_spd must be at least 1");
  const std::int32_t n = g.num_nodes;
  std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(n));
  for (const auto& e : g.edges) adj[e[0]].push_back(e[1]);
  IntMatrix dist = IntMatrix::Constant(n, n, kUnreachable);
  std::vector<std::int32_t> hops(static_cast<std::size_t>(n));
  for (std::int32_t s = 0; s < n; ++s) {
    std::fill(hops.begin(), hops.end(), -1);
    std::queue<std::int32_t> q;
    hops[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (const auto v : adj[u]) {
        if (hops[v] < 0) {
          hops[v] = hops[u] + 1;
          q.push(v);
        }
      }
    }
    for (std::int32_t t = 0; t < n; ++t) {
      if (hops[t] >= 0) dist(s, t) = std::min(hops[t], max_spd);
    }
  }
  return dist;
}

std::vector<std::int32_t> degree_centrality(const MolecularGraph& g, std::int32_t max_degree) {
  std::vector<std::int32_t> deg(static_cast<std::size_t>(g.num_nodes), 0);
  for (const auto& e : g.edges) ++deg[e[0]];
  for (auto& d : deg) d = std::min(d, max_degree);
  return deg;
}

DiffArray distance_kernels(const DiffArray& positions, const DiffArray& mu,
                           const DiffArray& sigma) {
  const Index n = positions.rows();
  std::vector<Index> pi, pj;
  pi.reserve(static_cast<std::size_t>(n * n));
  pj.reserve(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      pi.push_back(i);
      pj.push_back(j);
    }
  }
  return gaussian_kernels(pairwise_distance(positions, pi, pj), mu, sigma, kMinSigma);
}

GraphFeatures featurize_graph(const MolecularGraph& g, const EncodingOptions& options,
                              std::size_t graph_index) {
  GraphFeatures f;
  f.spectral = laplacian_features(g, options.k_lap, graph_index);
  f.random_walk = random_walk_features(g, options.k_rw);
  f.degree = degree_centrality(g, options.max_degree);
  f.spd = spd_map(g, options.max_spd);
  return f;
}

std::vector<GraphFeatures> featurize_dataset(const Dataset& dataset,
                                             const EncodingOptions& options) {
  std::vector<GraphFeatures> out;
  out.reserve(dataset.graphs.size());
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    out.push_back(featurize_graph(dataset.graphs[i], options, i));
  }
  return out;
}

}  // namespace graphmix

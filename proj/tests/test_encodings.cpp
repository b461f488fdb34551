// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "graphmix/encodings.hpp"
#include "graphmix/errors.hpp"
#include "support.hpp"
#include "test_util.hpp"

using namespace graphmix;
using namespace graphmix::testing;

namespace {

// Two graphs side by side, so there are unreachable pairs.
MolecularGraph disjoint_union(const MolecularGraph& a, const MolecularGraph& b) {
  MolecularGraph u;
  u.num_nodes = a.num_nodes + b.num_nodes;
  u.edges = a.edges;
  for (auto e : b.edges) u.edges.push_back({e[0] + a.num_nodes, e[1] + a.num_nodes});
  u.node_cats.resize(u.num_nodes, a.node_cats.cols());
  u.node_cats << a.node_cats, b.node_cats;
  u.edge_cats.resize(static_cast<Index>(u.edges.size()), a.edge_cats.cols());
  u.edge_cats << a.edge_cats, b.edge_cats;
  return u;
}

MolecularGraph path_graph(int n) {
  MolecularGraph g;
  g.num_nodes = n;
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.push_back({i, i + 1});
    g.edges.push_back({i + 1, i});
  }
  g.node_cats = CatMatrix::Zero(n, 1);
  g.edge_cats = CatMatrix::Zero(static_cast<Index>(g.edges.size()), 1);
  return g;
}

}  // namespace

TEST(Spd, MatchesFloydWarshallOn200Graphs) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    MolecularGraph g = graphmix::testing::random_graph(11, k, 2, 24);
    if (k % 3 == 0) g = disjoint_union(g, graphmix::testing::random_graph(12, k, 2, 10));
    const IntMatrix spd = spd_map(g, 1000);
    const IntMatrix fw = floyd_warshall(g);
    for (Index i = 0; i < g.num_nodes; ++i) {
      for (Index j = 0; j < g.num_nodes; ++j) {
        const int expect = fw(i, j) >= (1 << 20) ? kUnreachable : fw(i, j);
        ASSERT_EQ(spd(i, j), expect) << "graph " << k;
      }
    }
  }
}

TEST(Spd, ClampAndBuckets) {
  const MolecularGraph g = disjoint_union(path_graph(6), path_graph(2));
  const IntMatrix spd = spd_map(g, 3);
  EXPECT_EQ(spd(0, 5), 3);
  EXPECT_EQ(spd(0, 2), 2);
  EXPECT_EQ(spd(0, 6), kUnreachable);
  EXPECT_EQ(spd_bucket(spd(0, 6), 3), 4);
  EXPECT_EQ(spd_bucket(spd(0, 5), 3), 3);
  EXPECT_THROW(spd_map(g, 0), ConfigError);
}

TEST(RandomWalk, MatchesExplicitMatrixPowers) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    MolecularGraph g = graphmix::testing::random_graph(13, k, 1, 20);
    if (k % 5 == 0) g = disjoint_union(g, path_graph(1));  // an isolated node
    const Matrix rw = random_walk_features(g, 16);
    const Matrix expect = random_walk_oracle(g, 16);
    ASSERT_LE((rw - expect).cwiseAbs().maxCoeff(), 1e-12) << "graph " << k;
  }
}

TEST(Laplacian, PathGraphClosedForm) {
  const int n = 9;
  const SpectralFeatures f = laplacian_features(path_graph(n), 7);
  std::vector<double> expect;
  for (int k = 1; k <= 7; ++k) expect.push_back(2.0 - 2.0 * std::cos(M_PI * k / n));
  double norm = 0.0;
  for (double x : expect) norm += x * x;
  norm = std::sqrt(norm);
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(f.eig_values(0, k), expect[k] / norm, 1e-12);
}

TEST(Laplacian, AgreesWithJacobiOracle) {
  for (std::uint64_t k = 0; k < 60; ++k) {
    const MolecularGraph g = graphmix::testing::random_graph(14, k, 3, 20);
    const Matrix l = laplacian(g);
    const SpectralFeatures f = laplacian_features(g, 7);
    std::vector<double> vals;
    Matrix vecs;
    jacobi_eigen(l, &vals, &vecs);
    const Index n = g.num_nodes;
    const Index kept = std::min<Index>(7, n - 1);
    double norm = 0.0;
    for (Index j = 1; j <= kept; ++j) norm += vals[j] * vals[j];
    norm = std::sqrt(norm);
    for (Index j = 0; j < 7; ++j) {
      if (j >= kept) {
        EXPECT_EQ(f.eig_values(0, j), 0.0);
        EXPECT_EQ(f.eig_vectors.col(j).cwiseAbs().maxCoeff(), 0.0);
        continue;
      }
      const double lambda = vals[j + 1];
      EXPECT_NEAR(f.eig_values(0, j), lambda / norm, 1e-9);
      const Eigen::VectorXd v = f.eig_vectors.col(j);
      EXPECT_NEAR(v.norm(), 1.0, 1e-10);
      const double residual = (l * v - lambda * v).cwiseAbs().maxCoeff();
      EXPECT_LE(residual, 1e-8 * std::max(1.0, std::abs(lambda)));
      // Sign convention: first entry clearly away from zero is positive.
      for (Index i = 0; i < n; ++i) {
        if (std::abs(v(i)) > 1e-10) {
          EXPECT_GT(v(i), 0.0);
          break;
        }
      }
      // For a simple eigenvalue the oracle vector spans the same line.
      const bool simple = std::abs(vals[j + 1] - vals[j]) > 1e-6 &&
                          (j + 2 >= n || std::abs(vals[j + 2] - vals[j + 1]) > 1e-6);
      if (simple) EXPECT_NEAR(std::abs(v.dot(vecs.col(j + 1))), 1.0, 1e-8);
    }
  }
}

TEST(Laplacian, SingleNodeIsAllPadding) {
  const SpectralFeatures f = laplacian_features(path_graph(1), 7);
  EXPECT_EQ(f.eig_values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(f.eig_vectors.rows(), 1);
}

TEST(Centrality, DegreesClamp) {
  MolecularGraph star;
  star.num_nodes = 11;
  for (int i = 1; i < 11; ++i) {
    star.edges.push_back({0, i});
    star.edges.push_back({i, 0});
  }
  const auto d = degree_centrality(star, 8);
  EXPECT_EQ(d[0], 8);
  EXPECT_EQ(d[3], 1);
}

TEST(Kernels, ValuesAndRotationInvariance) {
  const MolecularGraph g = graphmix::testing::random_graph(15, 0, 6, 10);
  Matrix mu_row(1, 5);
  mu_row << 0.0, 1.0, 2.0, 3.0, 4.0;
  const DiffArray m = DiffArray::constant(mu_row);
  const DiffArray s = DiffArray::constant(Matrix::Constant(1, 5, 0.5));
  const Matrix pos = *g.positions;
  const Matrix psi = distance_kernels(DiffArray::constant(pos), m, s).value();
  const Index n = g.num_nodes;
  ASSERT_EQ(psi.rows(), n * n);
  const double d01 = (pos.row(0) - pos.row(1)).norm();
  const double z = (d01 - 2.0) / 0.5;
  EXPECT_NEAR(psi(1, 2), -std::exp(-0.5 * z * z) / (std::sqrt(2.0 * M_PI) * 0.5), 1e-14);

  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  Matrix moved = (pos * rot.transpose()).rowwise() + Eigen::RowVector3d(1.0, -2.0, 0.5);
  const Matrix psi2 = distance_kernels(DiffArray::constant(moved), m, s).value();
  EXPECT_LT((psi - psi2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sidecar, RoundTripAndCorruption) {
  SyntheticOptions o;
  o.count = 12;
  o.seed = 2;
  const Dataset ds = generate_synthetic(o);
  EncodingOptions opts{5, 6, 10, 6};
  const auto feats = featurize_dataset(ds, opts);
  const std::string path =
      (std::filesystem::temp_directory_path() / "graphmix_sidecar_test.bin").string();
  write_feature_sidecar(path, opts, feats);
  EncodingOptions back_opts;
  const auto back = read_feature_sidecar(path, &back_opts);
  EXPECT_EQ(back_opts, opts);
  ASSERT_EQ(back.size(), feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    EXPECT_EQ(back[i].spectral.eig_vectors, feats[i].spectral.eig_vectors);
    EXPECT_EQ(back[i].spectral.eig_values, feats[i].spectral.eig_values);
    EXPECT_EQ(back[i].random_walk, feats[i].random_walk);
    EXPECT_EQ(back[i].degree, feats[i].degree);
    EXPECT_EQ(back[i].spd, feats[i].spd);
  }
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  EXPECT_THROW(read_feature_sidecar(path), LoadError);
  std::filesystem::resize_file(path, 10);
  EXPECT_THROW(read_feature_sidecar(path), LoadError);
  std::filesystem::remove(path);
}

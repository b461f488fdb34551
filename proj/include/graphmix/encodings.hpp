// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Structural and geometric per-graph features: Laplacian eigenpairs,
// random-walk return probabilities, degree buckets, shortest-path maps and
// Gaussian distance kernels.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphmix/diff.hpp"
#include "graphmix/graph.hpp"

namespace graphmix {

using IntMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Marks disconnected pairs in an SPD map.
inline constexpr std::int32_t kUnreachable = -1;

struct EncodingOptions {
  std::int32_t k_lap = 7;
  std::int32_t k_rw = 16;
  std::int32_t max_spd = 20;
  std::int32_t max_degree = 8;
  friend bool operator==(const EncodingOptions&, const EncodingOptions&) = default;
};

struct SpectralFeatures {
  /// N × k_lap; column j is the eigenvector of the (j+2)-th smallest
  /// eigenvalue, zero-padded when N − 1 < k_lap.
  Matrix eig_vectors;
  /// 1 × k_lap, L2-normalised when non-zero, zero-padded.
  Matrix eig_values;
};

/// Dense symmetric adjacency built from the directed edge list.
Matrix adjacency_matrix(const MolecularGraph& g);

/// Eigenvectors follow the first-nonzero-entry-positive sign convention.
/// Solver failure or a residual above 1e-8·max(1, |λ|) raises NumericError
/// naming `graph_index`.
SpectralFeatures laplacian_features(const MolecularGraph& g, std::int32_t k_lap = 7,
                                    std::size_t graph_index = 0);

/// N × k_rw; entry (i, s−1) = (P^s)_ii with P = D⁻¹A and zero rows for
/// isolated nodes.
Matrix random_walk_features(const MolecularGraph& g, std::int32_t k_rw = 16);

/// BFS hop counts clamped to max_spd; kUnreachable across components.
IntMatrix spd_map(const MolecularGraph& g, std::int32_t max_spd = 20);

/// Embedding bucket for an SPD entry: the distance itself, or max_spd + 1
/// for unreachable pairs.
inline std::int32_t spd_bucket(std::int32_t d, std::int32_t max_spd) {
  return d == kUnreachable ? max_spd + 1 : d;
}

/// Node degrees clamped to max_degree.
std::vector<std::int32_t> degree_centrality(const MolecularGraph& g, std::int32_t max_degree = 8);

/// Lower bound applied to |σ| inside the Gaussian kernels.
inline constexpr double kMinSigma = 1e-3;

/// ψ for every ordered pair (i, j) of an N-node graph, row i·N + j, K columns.
/// Differentiable in positions, mu and sigma. Non-finite positions raise
/// NumericError.
DiffArray distance_kernels(const DiffArray& positions, const DiffArray& mu, const DiffArray& sigma);

/// Everything the batcher needs per graph, computed once per dataset.
struct GraphFeatures {
  SpectralFeatures spectral;
  Matrix random_walk;
  std::vector<std::int32_t> degree;
  IntMatrix spd;
};

GraphFeatures featurize_graph(const MolecularGraph& g, const EncodingOptions& options,
                              std::size_t graph_index = 0);
std::vector<GraphFeatures> featurize_dataset(const Dataset& dataset,
                                             const EncodingOptions& options);

/// Binary sidecar, little-endian: "GMXF", u32 version (1), u32 k_lap, u32 k_rw,
/// u32 max_spd, u32 max_degree, u64 graph count, then per graph: u32 N,
/// N·k_lap f64 eigenvectors (row-major), k_lap f64 eigenvalues, N·k_rw f64
/// random-walk probabilities, N i32 degrees, N·N i32 SPD entries.
void write_feature_sidecar(const std::string& path, const EncodingOptions& options,
                           const std::vector<GraphFeatures>& features);
std::vector<GraphFeatures> read_feature_sidecar(const std::string& path,
                                                EncodingOptions* options_out = nullptr);

}  // namespace graphmix

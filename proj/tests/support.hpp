// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Property checks shared by the unit tests and the acceptance runner.

#pragma once

#include <vector>

#include "graphmix/diff.hpp"
#include "graphmix/encodings.hpp"
#include "graphmix/model.hpp"

namespace graphmix::testing {

/// Relabels precomputed features to match permute_nodes(g, perm).
GraphFeatures permute_features(const GraphFeatures& f, const std::vector<std::int32_t>& perm);

std::vector<std::int32_t> random_permutation(std::int32_t n, std::uint64_t seed);

struct PermutationGap {
  double layer_nodes = 0.0;  // max |X_l[perm[i]] − X_l'[i]| over layers
  double edges = 0.0;
  double prediction = 0.0;
};
PermutationGap permutation_gap(const HybridModel& model, const MolecularGraph& g,
                               const GraphFeatures& f, const std::vector<std::int32_t>& perm,
                               MaskingGroup group);

/// Largest prediction change under a random rotation plus translation.
double rigid_motion_gap(const HybridModel& model, const MolecularGraph& g, const GraphFeatures& f,
                        std::uint64_t seed);

struct SpatialMaskCheck {
  double max_change = 0.0;  // over predictions and node outputs, expected exactly 0
  std::size_t position_reads = 0;
};
/// Moves every atom randomly and reruns under MaskSpatial.
SpatialMaskCheck spatial_mask_independence(const HybridModel& model, const MolecularGraph& g,
                                           const GraphFeatures& f, std::uint64_t seed);

/// Max |prediction packed − prediction alone| over the graphs of one pack.
double pack_vs_single_gap(const HybridModel& model, const std::vector<const MolecularGraph*>& graphs,
                          const std::vector<const GraphFeatures*>& features, MaskingGroup group,
                          bool pad);

/// Reverse mode vs central differences of the composite loss on one graph,
/// dropout off, all parameter tensors.
GradCheckReport model_grad_check(const HybridModel& model, const MolecularGraph& g,
                                 const GraphFeatures& f, const GradCheckOptions& options);

// Independent oracles for the encodings.

/// All-pairs hop counts; unreachable pairs keep a value of at least 1 << 20.
IntMatrix floyd_warshall(const MolecularGraph& g);
/// Cyclic Jacobi rotations; eigenvalues ascending, vectors as columns.
void jacobi_eigen(Matrix a, std::vector<double>* values, Matrix* vectors);
/// Combinatorial Laplacian D − A.
Matrix laplacian(const MolecularGraph& g);
/// diag(P^s) for s = 1..k from explicit dense matrix powers.
Matrix random_walk_oracle(const MolecularGraph& g, std::int32_t k);

}  // namespace graphmix::testing

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Generator of molecule-like graphs for tests, demos and packing statistics.
// Sizes follow a clipped normal around 14 atoms; bonds form a spanning tree
// plus a few ring closures, so the mean bond count is close to 15.

#pragma once

#include <cstdint>

#include "graphmix/graph.hpp"

namespace graphmix {

struct SyntheticOptions {
  std::size_t count = 64;
  std::uint64_t seed = 0;
  double mean_nodes = 14.0;
  double sd_nodes = 4.5;
  std::int32_t min_nodes = 2;
  std::int32_t max_nodes = 40;
  /// Expected ring closures per molecule beyond the spanning tree.
  double mean_rings = 1.6;
  /// Fraction of graphs that carry 3D positions.
  double position_fraction = 1.0;
  /// Fraction of graphs with a target; the rest are unlabelled.
  double label_fraction = 1.0;
  /// Fraction of labelled graphs listed as nominal validation.
  double valid_fraction = 0.0;
};

/// Deterministic in `options`. Uses the Set 1 vocabulary.
Dataset generate_synthetic(const SyntheticOptions& options);

/// One graph drawn from stream `index` of `seed`; the building block of
/// generate_synthetic, exposed for property tests.
MolecularGraph generate_graph(std::uint64_t seed, std::uint64_t index,
                              const SyntheticOptions& options);

}  // namespace graphmix

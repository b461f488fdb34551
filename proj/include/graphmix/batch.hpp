// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Flattens the graphs of one pack into the index arrays the model consumes.
// Node and edge rows of different graphs are contiguous; attention pairs only
// ever connect nodes of the same graph.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphmix/diff.hpp"
#include "graphmix/encodings.hpp"
#include "graphmix/graph.hpp"
#include "graphmix/packer.hpp"
#include "graphmix/rng.hpp"

namespace graphmix {

struct GraphView {
  const MolecularGraph* graph = nullptr;
  const GraphFeatures* features = nullptr;
  std::size_t id = 0;
};

struct CollateOptions {
  /// Lay the batch out at full pack capacity. Padding lives in one extra
  /// node row and one extra graph slot that never mix with real graphs.
  bool pad_to_spec = false;
  PackSpec spec{};
  std::int32_t max_spd = 20;
  /// Flip each eigenvector column with probability 1/2 (training only).
  RngStream* eig_sign_rng = nullptr;
};

class PackedBatch {
 public:
  Index num_nodes = 0;  // rows, including padding
  Index num_edges = 0;
  Index num_graphs = 0;  // slots, including the padding slot when padded
  Index real_graphs = 0;

  std::vector<std::size_t> graph_ids;
  std::vector<Index> node_graph, edge_graph, edge_src, edge_dst;
  std::vector<Index> node_offset, edge_offset;  // per real graph
  std::vector<std::uint8_t> node_valid, edge_valid, graph_valid;

  CatMatrix node_cats, edge_cats;
  /// Original categories before any corruption, for reconstruction targets.
  CatMatrix clean_node_cats, clean_edge_cats;
  /// Partner index of each edge row (padding self-loops map to themselves).
  std::vector<Index> edge_reverse;

  Matrix lap_vec;  // N × k_lap
  Matrix lap_val;  // N × k_lap, the graph's eigenvalues repeated per node
  Matrix random_walk;
  std::vector<Index> degree;

  /// All ordered same-graph node pairs (i, j), i == j included.
  std::vector<Index> pair_i, pair_j, pair_spd;
  /// Pair row of (src, dst) for every real edge; -1 on padding edges.
  std::vector<Index> edge_pair;
  /// N × N row-major; 1 where both nodes are valid and share a graph.
  std::vector<std::uint8_t> same_graph;

  std::vector<double> targets;
  std::vector<std::uint8_t> has_target;

  /// True when every real graph carries positions.
  bool has_positions() const noexcept { return positions_.has_value(); }
  /// Reading positions is counted so tests can prove a path never touches them.
  const Positions& positions() const;
  std::size_t position_reads() const noexcept { return position_reads_; }

  void set_positions(std::optional<Positions> p) { positions_ = std::move(p); }

 private:
  std::optional<Positions> positions_;
  mutable std::size_t position_reads_ = 0;
};

PackedBatch collate(std::span<const GraphView> graphs, const CollateOptions& options = {});

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Greedy streaming packer: graphs are appended to the open pack until one of
// the node, edge or graph limits would be exceeded, then a new pack opens.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphmix/graph.hpp"

namespace graphmix {

struct PackSpec {
  std::int32_t max_nodes = 60;
  /// Counts directed edges.
  std::int32_t max_edges = 120;
  std::int32_t max_graphs = 8;
  friend bool operator==(const PackSpec&, const PackSpec&) = default;
};

struct GraphSize {
  std::int32_t nodes = 0;
  std::int32_t edges = 0;
};

struct Pack {
  std::vector<std::size_t> graph_ids;
  /// Start row of each graph's nodes / edges inside the pack.
  std::vector<std::int32_t> node_offsets;
  std::vector<std::int32_t> edge_offsets;
  std::int32_t n_used = 0;
  std::int32_t m_used = 0;
  std::int32_t g_used = 0;
};

/// `ids[k]` names the graph of `sizes[k]`; pass an empty span to use k.
/// Throws OversizeError for a graph that does not fit an empty pack.
std::vector<Pack> pack_stream(std::span<const GraphSize> sizes, std::span<const std::size_t> ids,
                              const PackSpec& spec = {});
/// Packs dataset graphs in the given order.
std::vector<Pack> pack_stream(const std::vector<MolecularGraph>& graphs,
                              std::span<const std::size_t> order, const PackSpec& spec = {});

/// Validity masks of a pack laid out at full capacity.
std::vector<std::uint8_t> node_valid_mask(const Pack& pack, const PackSpec& spec);
std::vector<std::uint8_t> edge_valid_mask(const Pack& pack, const PackSpec& spec);
std::vector<std::uint8_t> graph_valid_mask(const Pack& pack, const PackSpec& spec);

struct PackEfficiency {
  double node_eff = 0.0;
  double edge_eff = 0.0;
  /// Used node plus edge slots over available node plus edge slots.
  double combined_eff = 0.0;
  double mean_graphs_per_pack = 0.0;
};

/// Counts are summed as integers before the final division. An empty pack
/// list raises ConfigError.
PackEfficiency pack_efficiency(std::span<const Pack> packs, const PackSpec& spec = {});

}  // namespace graphmix

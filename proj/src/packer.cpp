// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/packer.hpp"

#include "graphmix/errors.hpp"

namespace graphmix {

std::vector<Pack> pack_stream(std::span<const GraphSize> sizes, std::span<const std::size_t> ids,
                              const PackSpec& spec) {
  if (spec.max_nodes <= 0 || spec.max_edges <= 0 || spec.max_graphs <= 0) {
    throw ConfigError("pack limits must be positive");
  }
  if (!ids.empty() && ids.size() != sizes.size()) {
    throw ConfigError("pack_stream: ids and sizes differ in length");
  }
  std::vector<Pack> packs;
  Pack open;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::size_t id = ids.empty() ? k : ids[k];
    const GraphSize s = sizes[k];
    if (s.nodes > spec.max_nodes || s.edges > spec.max_edges) {
      throw OversizeError(id, std::to_string(s.nodes) + " nodes / " + std::to_string(s.edges) +
                                  " edges exceed pack capacity " + std::to_string(spec.max_nodes) +
                                  " / " + std::to_string(spec.max_edges));
    }
    if (open.g_used > 0 &&
        (open.n_used + s.nodes > spec.max_nodes || open.m_used + s.edges > spec.max_edges ||
         open.g_used + 1 > spec.max_graphs)) {
      packs.push_back(std::move(open));
      open = Pack{};
    }
    open.graph_ids.push_back(id);
    open.node_offsets.push_back(open.n_used);
    open.edge_offsets.push_back(open.m_used);
    open.n_used += s.nodes;
    open.m_used += s.edges;
    ++open.g_used;
  }
  if (open.g_used > 0) packs.push_back(std::move(open));
  return packs;
}

std::vector<Pack> pack_stream(const std::vector<MolecularGraph>& graphs,
                              std::span<const std::size_t> order, const PackSpec& spec) {
  std::vector<GraphSize> sizes;
  sizes.reserve(order.size());
  for (const auto i : order) {
    if (i >= graphs.size()) throw ConfigError("pack_stream: graph index out of range");
    sizes.push_back({graphs[i].num_nodes, graphs[i].num_edges()});
  }
  return pack_stream(sizes, order, spec);
}

std::vector<std::uint8_t> node_valid_mask(const Pack& pack, const PackSpec& spec) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(spec.max_nodes), 0);
  for (std::int32_t i = 0; i < pack.n_used; ++i) m[i] = 1;
  return m;
}

std::vector<std::uint8_t> edge_valid_mask(const Pack& pack, const PackSpec& spec) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(spec.max_edges), 0);
  for (std::int32_t i = 0; i < pack.m_used; ++i) m[i] = 1;
  return m;
}

std::vector<std::uint8_t> graph_valid_mask(const Pack& pack, const PackSpec& spec) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(spec.max_graphs), 0);
  for (std::int32_t i = 0; i < pack.g_used; ++i) m[i] = 1;
  return m;
}

PackEfficiency pack_efficiency(std::span<const Pack> packs, const PackSpec& spec) {
  if (packs.empty()) throw ConfigError("pack_efficiency: efficiency of an empty pack list is undefined");
  std::int64_t nodes = 0, edges = 0, graphs = 0;
  for (const auto& p : packs) {
    nodes += p.n_used;
    edges += p.m_used;
    graphs += p.g_used;
  }
  const auto count = static_cast<std::int64_t>(packs.size());
  PackEfficiency e;
  e.node_eff = static_cast<double>(nodes) / static_cast<double>(count * spec.max_nodes);
  e.edge_eff = static_cast<double>(edges) / static_cast<double>(count * spec.max_edges);
  e.combined_eff = static_cast<double>(nodes + edges) /
                   static_cast<double>(count * (spec.max_nodes + spec.max_edges));
  e.mean_graphs_per_pack = static_cast<double>(graphs) / static_cast<double>(count);
  return e;
}

}  // namespace graphmix

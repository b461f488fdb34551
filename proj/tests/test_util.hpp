// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numeric>
#include <vector>

#include "graphmix/batch.hpp"
#include "graphmix/config.hpp"
#include "graphmix/encodings.hpp"
#include "graphmix/graph.hpp"
#include "graphmix/model.hpp"
#include "graphmix/synthetic.hpp"

namespace graphmix::testing {

/// Small model used by the structural tests; dropouts off.
inline ModelConfig toy_config() {
  ModelConfig c;
  c.d_node = 16;
  c.d_edge = 8;
  c.d_global = 8;
  c.layers = 2;
  c.heads = 4;
  c.kernels = 8;
  c.k_lap = 3;
  c.k_rw = 4;
  c.encoder_latent = 4;
  c.embed_dim = 8;
  c.max_spd = 5;
  c.max_degree = 4;
  c.mlp_expansion = 2;
  c.dropout_message = c.dropout_node = c.dropout_global = c.dropout_attention = 0.0;
  c.dropout_encoder = c.dropout_ffn = c.graph_dropout_max = 0.0;
  return c;
}

inline MolecularGraph random_graph(std::uint64_t seed, std::uint64_t index, int min_nodes,
                                   int max_nodes, bool positions = true) {
  SyntheticOptions o;
  o.min_nodes = min_nodes;
  o.max_nodes = max_nodes;
  o.mean_nodes = 0.5 * (min_nodes + max_nodes);
  o.position_fraction = positions ? 1.0 : 0.0;
  return generate_graph(seed, index, o);
}

inline PackedBatch batch_of(const std::vector<const MolecularGraph*>& graphs,
                            const std::vector<const GraphFeatures*>& features,
                            std::int32_t max_spd, bool pad = false) {
  std::vector<GraphView> views;
  for (std::size_t k = 0; k < graphs.size(); ++k) views.push_back({graphs[k], features[k], k});
  CollateOptions o;
  o.max_spd = max_spd;
  o.pad_to_spec = pad;
  return collate(views, o);
}

inline PackedBatch single_batch(const MolecularGraph& g, const GraphFeatures& f,
                                std::int32_t max_spd) {
  return batch_of({&g}, {&f}, max_spd);
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace graphmix::testing

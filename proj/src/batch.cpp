// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/batch.hpp"

#include "graphmix/errors.hpp"

namespace graphmix {

const Positions& PackedBatch::positions() const {
  if (!positions_) throw MaskingError("positions requested for a batch without 3D coordinates");
  ++position_reads_;
  return *positions_;
}

PackedBatch collate(std::span<const GraphView> graphs, const CollateOptions& options) {
  if (graphs.empty()) throw ConfigError("collate: empty graph list");
  const auto& first = *graphs.front().features;
  const Index k_lap = first.spectral.eig_vectors.cols();
  const Index k_rw = first.random_walk.cols();
  const Index node_cols = graphs.front().graph->node_cats.cols();
  Index edge_cols = 0;
  for (const auto& v : graphs) edge_cols = std::max(edge_cols, v.graph->edge_cats.cols());

  Index n_real = 0, m_real = 0;
  for (const auto& v : graphs) {
    if (v.graph == nullptr || v.features == nullptr) throw ConfigError("collate: null graph view");
    n_real += v.graph->num_nodes;
    m_real += v.graph->num_edges();
  }
  const auto g_real = static_cast<Index>(graphs.size());

  PackedBatch b;
  b.real_graphs = g_real;
  if (options.pad_to_spec) {
    if (n_real > options.spec.max_nodes || m_real > options.spec.max_edges ||
        g_real > options.spec.max_graphs) {
      throw OversizeError(graphs.front().id, "graphs exceed the pack capacity");
    }
    b.num_nodes = options.spec.max_nodes + 1;
    b.num_edges = options.spec.max_edges;
    b.num_graphs = options.spec.max_graphs + 1;
  } else {
    b.num_nodes = n_real;
    b.num_edges = m_real;
    b.num_graphs = g_real;
  }
  const Index n = b.num_nodes;
  const Index m = b.num_edges;
  const Index junk_graph = b.num_graphs - 1;
  const Index junk_node = n - 1;

  b.node_graph.assign(static_cast<std::size_t>(n), junk_graph);
  b.edge_graph.assign(static_cast<std::size_t>(m), junk_graph);
  b.edge_src.assign(static_cast<std::size_t>(m), junk_node);
  b.edge_dst.assign(static_cast<std::size_t>(m), junk_node);
  b.edge_reverse.resize(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) b.edge_reverse[k] = k;
  b.edge_pair.assign(static_cast<std::size_t>(m), -1);
  b.node_valid.assign(static_cast<std::size_t>(n), 0);
  b.edge_valid.assign(static_cast<std::size_t>(m), 0);
  b.graph_valid.assign(static_cast<std::size_t>(b.num_graphs), 0);
  b.node_cats = CatMatrix::Zero(n, node_cols);
  b.edge_cats = CatMatrix::Zero(m, edge_cols);
  b.lap_vec = Matrix::Zero(n, k_lap);
  b.lap_val = Matrix::Zero(n, k_lap);
  b.random_walk = Matrix::Zero(n, k_rw);
  b.degree.assign(static_cast<std::size_t>(n), 0);
  b.same_graph.assign(static_cast<std::size_t>(n * n), 0);
  b.targets.assign(static_cast<std::size_t>(b.num_graphs), 0.0);
  b.has_target.assign(static_cast<std::size_t>(b.num_graphs), 0);

  bool all_positions = true;
  for (const auto& v : graphs) all_positions = all_positions && v.graph->positions.has_value();
  Positions pos;
  if (all_positions) pos = Positions::Zero(n, 3);

  Index node_at = 0, edge_at = 0;
  for (Index gi = 0; gi < g_real; ++gi) {
    const MolecularGraph& g = *graphs[gi].graph;
    const GraphFeatures& f = *graphs[gi].features;
    const Index gn = g.num_nodes;
    const Index gm = g.num_edges();
    if (f.spectral.eig_vectors.rows() != gn || static_cast<Index>(f.degree.size()) != gn ||
        f.spd.rows() != gn || f.spectral.eig_vectors.cols() != k_lap ||
        f.random_walk.cols() != k_rw) {
      throw ShapeError("collate: features of graph " + std::to_string(graphs[gi].id) +
                       " do not match the graph");
    }
    if (g.node_cats.cols() != node_cols) throw ShapeError("collate: node column counts differ");
    b.graph_ids.push_back(graphs[gi].id);
    b.node_offset.push_back(node_at);
    b.edge_offset.push_back(edge_at);
    b.graph_valid[gi] = 1;
    if (g.target) {
      b.targets[gi] = *g.target;
      b.has_target[gi] = 1;
    }

    Matrix vecs = f.spectral.eig_vectors;
    if (options.eig_sign_rng != nullptr) {
      for (Index c = 0; c < k_lap; ++c)
        if (options.eig_sign_rng->bernoulli(0.5)) vecs.col(c) = -vecs.col(c);
    }
    for (Index i = 0; i < gn; ++i) {
      const Index r = node_at + i;
      b.node_graph[r] = gi;
      b.node_valid[r] = 1;
      b.node_cats.row(r) = g.node_cats.row(i);
      b.lap_vec.row(r) = vecs.row(i);
      b.lap_val.row(r) = f.spectral.eig_values.row(0);
      b.random_walk.row(r) = f.random_walk.row(i);
      b.degree[r] = f.degree[i];
      if (all_positions) pos.row(r) = g.positions->row(i);
    }

    const Index pair_base = static_cast<Index>(b.pair_i.size());
    for (Index i = 0; i < gn; ++i) {
      for (Index j = 0; j < gn; ++j) {
        b.pair_i.push_back(node_at + i);
        b.pair_j.push_back(node_at + j);
        b.pair_spd.push_back(spd_bucket(f.spd(i, j), options.max_spd));
        b.same_graph[(node_at + i) * n + node_at + j] = 1;
      }
    }

    const auto rev = reverse_edge_index(g);
    for (Index k = 0; k < gm; ++k) {
      const Index r = edge_at + k;
      b.edge_graph[r] = gi;
      b.edge_valid[r] = 1;
      b.edge_src[r] = node_at + g.edges[k][0];
      b.edge_dst[r] = node_at + g.edges[k][1];
      b.edge_reverse[r] = edge_at + rev[k];
      b.edge_pair[r] = pair_base + g.edges[k][0] * gn + g.edges[k][1];
      if (gm > 0) b.edge_cats.row(r).head(g.edge_cats.cols()) = g.edge_cats.row(k);
    }
    node_at += gn;
    edge_at += gm;
  }
  b.clean_node_cats = b.node_cats;
  b.clean_edge_cats = b.edge_cats;
  if (all_positions) b.set_positions(std::move(pos));
  return b;
}

}  // namespace graphmix

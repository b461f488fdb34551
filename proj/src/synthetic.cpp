// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "graphmix/rng.hpp"

namespace graphmix {
namespace {

struct Element {
  std::int32_t z, group, period, type, valence;
  double weight;
};

// C, N, O, F, S, Cl with rough organic frequencies.
constexpr Element kElements[] = {
    {6, 14, 2, 1, 4, 0.72}, {7, 15, 2, 2, 3, 0.12}, {8, 16, 2, 3, 2, 0.11},
    {9, 17, 2, 4, 1, 0.02}, {16, 16, 3, 5, 2, 0.02}, {17, 17, 3, 6, 1, 0.01},
};

const Element& draw_element(RngStream& rng) {
  double u = rng.uniform();
  for (const auto& e : kElements) {
    if (u < e.weight) return e;
    u -= e.weight;
  }
  return kElements[0];
}

std::vector<std::int32_t> bfs_dist(const std::vector<std::vector<std::int32_t>>& adj,
                                   std::int32_t src, std::int32_t skip_u = -1,
                                   std::int32_t skip_v = -1) {
  std::vector<std::int32_t> d(adj.size(), -1);
  std::queue<std::int32_t> q;
  d[src] = 0;
  q.push(src);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (const auto v : adj[u]) {
      if ((u == skip_u && v == skip_v) || (u == skip_v && v == skip_u)) continue;
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push(v);
      }
    }
  }
  return d;
}

}  // namespace

MolecularGraph generate_graph(std::uint64_t seed, std::uint64_t index,
                              const SyntheticOptions& options) {
  RngStream rng(seed, mix_keys({index, 0x6d6f6cULL}));
  const double raw = options.mean_nodes + options.sd_nodes * rng.normal();
  const auto n = std::clamp(static_cast<std::int32_t>(std::lround(raw)), options.min_nodes,
                            options.max_nodes);

  std::vector<const Element*> atoms(static_cast<std::size_t>(n));
  for (auto& a : atoms) a = &draw_element(rng);
  // Keep the first atom a carbon so small molecules still grow a backbone.
  atoms[0] = &kElements[0];

  std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(n));
  std::vector<Edge> bonds;
  auto degree = [&](std::int32_t i) { return static_cast<std::int32_t>(adj[i].size()); };

  for (std::int32_t i = 1; i < n; ++i) {
    std::vector<std::int32_t> open;
    for (std::int32_t j = 0; j < i; ++j)
      if (degree(j) < atoms[j]->valence) open.push_back(j);
    if (open.empty()) {
      for (std::int32_t j = 0; j < i; ++j)
        if (degree(j) < 4) open.push_back(j);
    }
    if (open.empty()) {
      for (std::int32_t j = 0; j < i; ++j) open.push_back(j);
    }
    const auto parent = open[rng.uniform_int(open.size())];
    adj[parent].push_back(i);
    adj[i].push_back(parent);
    bonds.push_back({parent, i});
  }

  // Ring closures between atoms four or five bonds apart (5- and 6-rings).
  for (int attempt = 0; attempt < 4 && n >= 5; ++attempt) {
    if (!rng.bernoulli(std::min(1.0, options.mean_rings / 4.0))) continue;
    if (bonds.size() >= 60) break;
    const auto a = static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    if (degree(a) >= atoms[a]->valence) continue;
    const auto d = bfs_dist(adj, a);
    std::vector<std::int32_t> cand;
    for (std::int32_t b = 0; b < n; ++b) {
      if ((d[b] == 4 || d[b] == 5) && degree(b) < atoms[b]->valence) cand.push_back(b);
    }
    if (cand.empty()) continue;
    const auto b = cand[rng.uniform_int(cand.size())];
    adj[a].push_back(b);
    adj[b].push_back(a);
    bonds.push_back({std::min(a, b), std::max(a, b)});
  }

  // A bond lies in a ring when its endpoints stay connected without it.
  std::vector<std::uint8_t> bond_ring(bonds.size(), 0);
  std::vector<std::uint8_t> atom_ring(static_cast<std::size_t>(n), 0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto d = bfs_dist(adj, bonds[b][0], bonds[b][0], bonds[b][1]);
    if (d[bonds[b][1]] >= 0) {
      bond_ring[b] = 1;
      atom_ring[bonds[b][0]] = atom_ring[bonds[b][1]] = 1;
    }
  }
  std::vector<std::uint8_t> aromatic(static_cast<std::size_t>(n), 0);
  for (std::int32_t i = 0; i < n; ++i) {
    aromatic[i] = atom_ring[i] && (atoms[i]->z == 6 || atoms[i]->z == 7);
  }

  const Vocabulary vocab = set1_vocabulary();
  MolecularGraph g;
  g.num_nodes = n;
  g.edges.reserve(bonds.size() * 2);
  g.edge_cats.resize(static_cast<Eigen::Index>(bonds.size() * 2), 3);
  std::vector<std::int32_t> extra_valence(static_cast<std::size_t>(n), 0);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto [u, v] = bonds[b];
    std::int32_t type = 1;
    if (bond_ring[b] && aromatic[u] && aromatic[v]) {
      type = 4;
    } else if (degree(u) < atoms[u]->valence && degree(v) < atoms[v]->valence &&
               rng.bernoulli(0.3)) {
      type = 2;
      ++extra_valence[u];
      ++extra_valence[v];
    }
    const std::int32_t stereo = type == 2 && rng.bernoulli(0.2) ? 2 : 0;
    g.edges.push_back({u, v});
    g.edges.push_back({v, u});
    for (int k = 0; k < 2; ++k) g.edge_cats.row(2 * b + k) << type, stereo, bond_ring[b];
  }

  g.node_cats.resize(n, static_cast<Eigen::Index>(vocab.node.size()));
  for (std::int32_t i = 0; i < n; ++i) {
    const Element& e = *atoms[i];
    const std::int32_t deg = degree(i);
    const std::int32_t hydrogens =
        std::clamp(e.valence - deg - extra_valence[i] - (aromatic[i] ? 1 : 0), 0, 9);
    std::int32_t charge = 5;  // neutral
    if (e.z == 7 && deg == 4) charge = 6;
    const std::int32_t chiral = e.z == 6 && deg >= 3 && !aromatic[i] && rng.bernoulli(0.3);
    g.node_cats.row(i) << e.z, e.group, e.period, e.type, std::min(deg, 11), charge, hydrogens, 0,
        aromatic[i], atom_ring[i], chiral;
  }

  // Coordinates: grow outward from atom 0 with ~1.45 bond lengths, keeping
  // non-bonded atoms apart.
  Positions pos = Positions::Zero(n, 3);
  std::vector<std::uint8_t> placed(static_cast<std::size_t>(n), 0);
  placed[0] = 1;
  std::queue<std::int32_t> q;
  q.push(0);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (const auto v : adj[u]) {
      if (placed[v]) continue;
      Eigen::RowVector3d best = pos.row(u);
      double best_gap = -1.0;
      for (int t = 0; t < 24; ++t) {
        Eigen::RowVector3d dir(rng.normal(), rng.normal(), rng.normal());
        if (dir.norm() < 1e-9) continue;
        const Eigen::RowVector3d cand = pos.row(u) + 1.45 * dir.normalized();
        double gap = 1e9;
        for (std::int32_t w = 0; w < n; ++w)
          if (placed[w] && w != u) gap = std::min(gap, (pos.row(w) - cand).norm());
        if (gap > best_gap) {
          best_gap = gap;
          best = cand;
        }
        if (gap > 2.2) break;
      }
      pos.row(v) = best;
      placed[v] = 1;
      q.push(v);
    }
  }

  // Smooth, deterministic target in the eV range: conjugation and size
  // narrow the gap, heteroatoms and compactness widen it.
  double arom = 0.0, hetero = 0.0, doubles = 0.0;
  for (std::int32_t i = 0; i < n; ++i) {
    arom += aromatic[i];
    hetero += atoms[i]->z != 6;
  }
  for (std::size_t b = 0; b < bonds.size(); ++b) doubles += g.edge_cats(2 * b, 0) == 2;
  const Eigen::RowVector3d centre = pos.colwise().mean();
  const double rg = std::sqrt((pos.rowwise() - centre).rowwise().squaredNorm().mean());
  g.target = 8.0 - 2.2 * arom / n - 0.9 * std::log(static_cast<double>(n)) + 0.8 * hetero / n -
             0.35 * doubles / std::max<double>(1.0, static_cast<double>(bonds.size())) -
             0.08 * rg;

  RngStream meta(seed, mix_keys({index, 0x6d657461ULL}));
  if (meta.uniform() < options.position_fraction) g.positions = std::move(pos);
  if (!(meta.uniform() < options.label_fraction)) g.target.reset();
  return g;
}

Dataset generate_synthetic(const SyntheticOptions& options) {
  Dataset ds;
  ds.vocab = set1_vocabulary();
  ds.graphs.reserve(options.count);
  RngStream pick(options.seed, 0x76616c6964ULL);
  for (std::size_t i = 0; i < options.count; ++i) {
    ds.graphs.push_back(generate_graph(options.seed, i, options));
    const bool valid = pick.uniform() < options.valid_fraction;
    if (ds.graphs.back().target && valid) ds.valid_indices.push_back(i);
  }
  return ds;
}

}  // namespace graphmix

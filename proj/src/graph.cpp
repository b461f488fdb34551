// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "graphmix/errors.hpp"
#include "graphmix/rng.hpp"

namespace graphmix {

Vocabulary set1_vocabulary() {
  // Index 0 of each column doubles as "other / unknown".
  return Vocabulary{
      .node = {119, 19, 8, 11, 12, 12, 10, 6, 2, 2, 2},
      .edge = {5, 6, 2},
  };
}

bool operator==(const MolecularGraph& a, const MolecularGraph& b) {
  if (a.num_nodes != b.num_nodes || a.edges != b.edges || a.target != b.target) return false;
  if (a.node_cats.rows() != b.node_cats.rows() || a.node_cats.cols() != b.node_cats.cols() ||
      a.node_cats != b.node_cats) {
    return false;
  }
  if (a.edge_cats.rows() != b.edge_cats.rows() || a.edge_cats.cols() != b.edge_cats.cols() ||
      a.edge_cats != b.edge_cats) {
    return false;
  }
  if (a.positions.has_value() != b.positions.has_value()) return false;
  if (a.positions && (a.positions->rows() != b.positions->rows() || *a.positions != *b.positions)) {
    return false;
  }
  return true;
}

void validate_graph(const MolecularGraph& g, const Vocabulary& vocab, std::size_t line) {
  auto fail = [line](const std::string& what) { throw ValidationError(line, what); };
  if (g.num_nodes < 1) fail("num_nodes must be at least 1");
  if (g.node_cats.rows() != g.num_nodes) fail("node_cats must have one row per node");
  if (g.node_cats.cols() != static_cast<Eigen::Index>(vocab.node.size())) {
    fail("node_cats has " + std::to_string(g.node_cats.cols()) + " columns, vocabulary declares " +
         std::to_string(vocab.node.size()));
  }
  if (g.edge_cats.rows() != g.num_edges()) fail("edge_cats must have one row per edge");
  if (g.num_edges() > 0 && g.edge_cats.cols() != static_cast<Eigen::Index>(vocab.edge.size())) {
    fail("edge_cats has " + std::to_string(g.edge_cats.cols()) + " columns, vocabulary declares " +
         std::to_string(vocab.edge.size()));
  }
  for (Eigen::Index r = 0; r < g.node_cats.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.node_cats.cols(); ++c) {
      const auto v = g.node_cats(r, c);
      if (v < 0 || v >= vocab.node[c]) {
        fail("node " + std::to_string(r) + " column " + std::to_string(c) + ": category " +
             std::to_string(v) + " outside vocabulary of size " + std::to_string(vocab.node[c]));
      }
    }
  }
  for (Eigen::Index r = 0; r < g.edge_cats.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.edge_cats.cols(); ++c) {
      const auto v = g.edge_cats(r, c);
      if (v < 0 || v >= vocab.edge[c]) {
        fail("edge " + std::to_string(r) + " column " + std::to_string(c) + ": category " +
             std::to_string(v) + " outside vocabulary of size " + std::to_string(vocab.edge[c]));
      }
    }
  }
  std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> seen;
  for (std::int32_t k = 0; k < g.num_edges(); ++k) {
    const auto [u, v] = g.edges[k];
    if (u < 0 || u >= g.num_nodes || v < 0 || v >= g.num_nodes) {
      fail("edge " + std::to_string(k) + " endpoint out of range [0, " +
           std::to_string(g.num_nodes) + ")");
    }
    if (u == v) fail("edge " + std::to_string(k) + " is a self-loop");
    if (!seen.emplace(std::make_pair(u, v), k).second) {
      fail("duplicate edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    }
  }
  for (std::int32_t k = 0; k < g.num_edges(); ++k) {
    const auto [u, v] = g.edges[k];
    auto it = seen.find({v, u});
    if (it == seen.end()) fail("edge " + std::to_string(k) + " has no reverse edge");
    if (g.edge_cats.row(k) != g.edge_cats.row(it->second)) {
      fail("edge " + std::to_string(k) + " and its reverse carry different categories");
    }
  }
  if (g.positions) {
    if (g.positions->rows() != g.num_nodes) fail("positions must have one row per node");
    if (!g.positions->allFinite()) fail("positions contain non-finite values");
  }
  if (g.target && !std::isfinite(*g.target)) fail("target is not finite");
}

std::vector<std::int32_t> reverse_edge_index(const MolecularGraph& g) {
  std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> where;
  for (std::int32_t k = 0; k < g.num_edges(); ++k) where[{g.edges[k][0], g.edges[k][1]}] = k;
  std::vector<std::int32_t> rev(g.edges.size(), -1);
  for (std::int32_t k = 0; k < g.num_edges(); ++k) {
    auto it = where.find({g.edges[k][1], g.edges[k][0]});
    if (it == where.end()) throw ValidationError("edge " + std::to_string(k) + " has no reverse edge");
    rev[k] = it->second;
  }
  return rev;
}

MolecularGraph permute_nodes(const MolecularGraph& g, const std::vector<std::int32_t>& perm) {
  if (static_cast<std::int32_t>(perm.size()) != g.num_nodes) {
    throw ShapeError("permute_nodes: permutation size differs from node count");
  }
  MolecularGraph out = g;
  for (std::int32_t i = 0; i < g.num_nodes; ++i) {
    out.node_cats.row(perm[i]) = g.node_cats.row(i);
    if (g.positions) out.positions->row(perm[i]) = g.positions->row(i);
  }
  for (auto& e : out.edges) e = {perm[e[0]], perm[e[1]]};
  return out;
}

namespace {

std::vector<std::size_t> sorted_difference(std::vector<std::size_t> a,
                                           const std::vector<std::size_t>& b) {
  std::set<std::size_t> drop(b.begin(), b.end());
  std::vector<std::size_t> out;
  for (auto i : a)
    if (!drop.count(i)) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

DatasetSplit make_split(const std::vector<std::size_t>& labelled,
                        const std::vector<std::size_t>& valid, const std::string& name,
                        std::uint64_t seed) {
  std::set<std::size_t> lab(labelled.begin(), labelled.end());
  for (auto v : valid) {
    if (!lab.count(v)) throw ConfigError("validation index " + std::to_string(v) + " is not labelled");
  }
  std::vector<std::size_t> valid_sorted(valid.begin(), valid.end());
  std::sort(valid_sorted.begin(), valid_sorted.end());
  valid_sorted.erase(std::unique(valid_sorted.begin(), valid_sorted.end()), valid_sorted.end());

  DatasetSplit split;
  split.name = name;
  std::vector<std::size_t> base(lab.begin(), lab.end());
  if (name == "original") {
    split.train_indices = sorted_difference(base, valid_sorted);
    split.eval_indices = valid_sorted;
  } else if (name == "train_plus_valid") {
    split.train_indices = base;
  } else if (name == "train_plus_half_valid") {
    std::vector<std::size_t> shuffled = valid_sorted;
    RngStream rng(seed, 0x73706c6974ULL);
    shuffle(shuffled, rng);
    const std::size_t moved = shuffled.size() / 2;
    std::vector<std::size_t> held(shuffled.begin() + static_cast<std::ptrdiff_t>(moved),
                                  shuffled.end());
    std::sort(held.begin(), held.end());
    split.train_indices = sorted_difference(base, held);
    split.eval_indices = held;
  } else {
    throw ConfigError("unknown split name '" + name +
                      "' (expected original, train_plus_valid or train_plus_half_valid)");
  }
  return split;
}

DatasetSplit make_split(std::size_t dataset_size, const std::vector<std::size_t>& valid,
                        const std::string& name, std::uint64_t seed) {
  std::vector<std::size_t> labelled(dataset_size);
  for (std::size_t i = 0; i < dataset_size; ++i) labelled[i] = i;
  return make_split(labelled, valid, name, seed);
}

DatasetSplit make_split(const Dataset& dataset, const std::string& name, std::uint64_t seed) {
  std::vector<std::size_t> labelled;
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i)
    if (dataset.graphs[i].target) labelled.push_back(i);
  return make_split(labelled, dataset.valid_indices, name, seed);
}

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace graphmix {

using CatMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Edge = std::array<std::int32_t, 2>;

/// Category counts per feature column.
struct Vocabulary {
  std::vector<std::int32_t> node;
  std::vector<std::int32_t> edge;
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Eleven atom columns (atomic number, group, period, element type, degree,
/// formal charge, #H, #radical electrons, aromatic, in ring, chiral center)
/// and three bond columns (type, stereo, in ring).
Vocabulary set1_vocabulary();

/// One molecule. Edges are directed; every chemical bond appears as two
/// opposite edges carrying identical categories.
struct MolecularGraph {
  std::int32_t num_nodes = 0;
  std::vector<Edge> edges;
  CatMatrix node_cats;
  CatMatrix edge_cats;
  std::optional<Positions> positions;
  std::optional<double> target;

  std::int32_t num_edges() const noexcept { return static_cast<std::int32_t>(edges.size()); }
  friend bool operator==(const MolecularGraph&, const MolecularGraph&);
};

/// Throws ValidationError (tagged with `line` when non-zero) on the first
/// violated invariant: endpoint range, self-loop, duplicate edge, missing or
/// mismatched reverse edge, column counts, out-of-vocabulary category,
/// positions shape, non-finite values.
void validate_graph(const MolecularGraph& g, const Vocabulary& vocab, std::size_t line = 0);

/// For each edge, the index of its reverse partner.
std::vector<std::int32_t> reverse_edge_index(const MolecularGraph& g);

/// Applies a node relabelling: node i becomes perm[i]. Edge order is kept.
MolecularGraph permute_nodes(const MolecularGraph& g, const std::vector<std::int32_t>& perm);

struct Dataset {
  Vocabulary vocab;
  std::vector<MolecularGraph> graphs;
  /// Nominal validation portion. When the file does not list it, labelled
  /// graphs without positions are taken as validation.
  std::vector<std::size_t> valid_indices;
};

struct LoadOptions {
  /// When true, `edges` lists directed edges (both directions present) and
  /// `edge_cats` has one row per directed edge; reverse pairs are verified.
  /// Otherwise each listed bond is expanded to edges 2b=(u,v), 2b+1=(v,u).
  bool edges_are_directed = false;
};

Dataset load_dataset(const std::string& path, const LoadOptions& options = {});
Dataset read_dataset(std::istream& in, const LoadOptions& options = {});
/// Writes the undirected bond form; each bond is emitted once at the first of
/// its two directed edges.
void save_dataset(const std::string& path, const Dataset& dataset);
void write_dataset(std::ostream& out, const Dataset& dataset);

struct DatasetSplit {
  std::string name;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> eval_indices;
};

/// `labelled` lists the indices that carry targets, `valid` the nominal
/// validation subset of them. Names: original, train_plus_valid,
/// train_plus_half_valid (moves a seeded random floor(|valid|/2) into training).
DatasetSplit make_split(const std::vector<std::size_t>& labelled,
                        const std::vector<std::size_t>& valid, const std::string& name,
                        std::uint64_t seed);
/// Convenience form where every index in [0, dataset_size) is labelled.
DatasetSplit make_split(std::size_t dataset_size, const std::vector<std::size_t>& valid,
                        const std::string& name, std::uint64_t seed);
DatasetSplit make_split(const Dataset& dataset, const std::string& name, std::uint64_t seed);

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// JSON Lines dataset files. Line 1 is the header
//   {"version":1,"node_vocab":[...],"edge_vocab":[...]}
// optionally with "valid_indices":[...]; every further non-blank line is one
// graph record with num_nodes, edges, node_cats, edge_cats and the optional
// positions and target.

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graphmix/errors.hpp"
#include "graphmix/graph.hpp"

namespace graphmix {
namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::int32_t as_int(const json& v, std::size_t line, const char* what) {
  if (!v.is_number_integer()) throw ParseError(line, std::string(what) + " must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) throw ParseError(line, std::string(what) + " out of range");
  return static_cast<std::int32_t>(x);
}

double as_real(const json& v, std::size_t line, const char* what) {
  if (!v.is_number()) throw ParseError(line, std::string(what) + " must be a number");
  return v.get<double>();
}

const json& as_array(const json& v, std::size_t line, const char* what) {
  if (!v.is_array()) throw ParseError(line, std::string(what) + " must be an array");
  return v;
}

CatMatrix parse_cats(const json& v, std::size_t rows, std::size_t line, const char* what) {
  as_array(v, line, what);
  if (v.size() != rows) {
    throw ValidationError(line, std::string(what) + " has " + std::to_string(v.size()) +
                                    " rows, expected " + std::to_string(rows));
  }
  std::size_t cols = rows == 0 ? 0 : as_array(v[0], line, what).size();
  CatMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = as_array(v[r], line, what);
    if (row.size() != cols) throw ValidationError(line, std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = as_int(row[c], line, what);
  }
  return m;
}

std::vector<std::int32_t> parse_vocab(const json& v, std::size_t line, const char* what) {
  std::vector<std::int32_t> out;
  for (const auto& x : as_array(v, line, what)) {
    const auto n = as_int(x, line, what);
    if (n < 1) throw ValidationError(line, std::string(what) + " sizes must be positive");
    out.push_back(n);
  }
  return out;
}

MolecularGraph parse_record(const json& rec, const Vocabulary& vocab, const LoadOptions& options,
                            std::size_t line) {
  if (!rec.is_object()) throw ParseError(line, "record must be a JSON object");
  MolecularGraph g;
  g.num_nodes = as_int(field(rec, "num_nodes", line), line, "num_nodes");
  if (g.num_nodes < 1) throw ValidationError(line, "num_nodes must be at least 1");
  const json& edges = as_array(field(rec, "edges", line), line, "edges");
  std::vector<Edge> listed;
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2) throw ParseError(line, "each edge must be a [u, v] pair");
    listed.push_back({as_int(e[0], line, "edge endpoint"), as_int(e[1], line, "edge endpoint")});
  }
  g.node_cats = parse_cats(field(rec, "node_cats", line), static_cast<std::size_t>(g.num_nodes),
                           line, "node_cats");
  CatMatrix listed_cats = parse_cats(field(rec, "edge_cats", line), listed.size(), line, "edge_cats");
  if (listed.empty()) listed_cats.resize(0, static_cast<Eigen::Index>(vocab.edge.size()));

  if (options.edges_are_directed) {
    g.edges = std::move(listed);
    g.edge_cats = std::move(listed_cats);
  } else {
    g.edges.reserve(listed.size() * 2);
    g.edge_cats.resize(static_cast<Eigen::Index>(listed.size() * 2), listed_cats.cols());
    for (std::size_t b = 0; b < listed.size(); ++b) {
      g.edges.push_back(listed[b]);
      g.edges.push_back({listed[b][1], listed[b][0]});
      g.edge_cats.row(2 * b) = listed_cats.row(b);
      g.edge_cats.row(2 * b + 1) = listed_cats.row(b);
    }
  }

  if (auto it = rec.find("positions"); it != rec.end() && !it->is_null()) {
    const json& pos = as_array(*it, line, "positions");
    if (pos.size() != static_cast<std::size_t>(g.num_nodes)) {
      throw ValidationError(line, "positions must have one row per node");
    }
    Positions p(g.num_nodes, 3);
    for (std::int32_t i = 0; i < g.num_nodes; ++i) {
      const json& row = as_array(pos[i], line, "positions");
      if (row.size() != 3) throw ValidationError(line, "positions rows must have 3 coordinates");
      for (int c = 0; c < 3; ++c) p(i, c) = as_real(row[c], line, "position");
    }
    g.positions = std::move(p);
  }
  if (auto it = rec.find("target"); it != rec.end() && !it->is_null()) {
    g.target = as_real(*it, line, "target");
  }
  validate_graph(g, vocab, line);
  return g;
}

}  // namespace

Dataset read_dataset(std::istream& in, const LoadOptions& options) {
  Dataset ds;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  bool explicit_valid = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!obj.is_object()) throw ParseError(line, "header must be a JSON object");
      if (as_int(field(obj, "version", line), line, "version") != 1) {
        throw ParseError(line, "unsupported dataset version");
      }
      ds.vocab.node = parse_vocab(field(obj, "node_vocab", line), line, "node_vocab");
      ds.vocab.edge = parse_vocab(field(obj, "edge_vocab", line), line, "edge_vocab");
      if (auto it = obj.find("valid_indices"); it != obj.end()) {
        explicit_valid = true;
        for (const auto& v : as_array(*it, line, "valid_indices")) {
          const auto i = as_int(v, line, "valid index");
          if (i < 0) throw ValidationError(line, "negative validation index");
          ds.valid_indices.push_back(static_cast<std::size_t>(i));
        }
      }
      have_header = true;
      continue;
    }
    ds.graphs.push_back(parse_record(obj, ds.vocab, options, line));
  }
  if (!have_header) throw ParseError(line, "missing header line");
  if (explicit_valid) {
    for (auto i : ds.valid_indices) {
      if (i >= ds.graphs.size() || !ds.graphs[i].target) {
        throw ValidationError(1, "validation index " + std::to_string(i) +
                                     " does not name a labelled graph");
      }
    }
  } else {
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
      if (ds.graphs[i].target && !ds.graphs[i].positions) ds.valid_indices.push_back(i);
    }
  }
  return ds;
}

Dataset load_dataset(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open dataset file " + path);
  return read_dataset(in, options);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  json header = {{"version", 1},
                 {"node_vocab", dataset.vocab.node},
                 {"edge_vocab", dataset.vocab.edge},
                 {"valid_indices", dataset.valid_indices}};
  out << header.dump() << '\n';
  for (const auto& g : dataset.graphs) {
    const auto rev = reverse_edge_index(g);
    json edges = json::array();
    json edge_cats = json::array();
    for (std::int32_t k = 0; k < g.num_edges(); ++k) {
      if (rev[k] < k) continue;
      edges.push_back({g.edges[k][0], g.edges[k][1]});
      json row = json::array();
      for (Eigen::Index c = 0; c < g.edge_cats.cols(); ++c) row.push_back(g.edge_cats(k, c));
      edge_cats.push_back(std::move(row));
    }
    json node_cats = json::array();
    for (Eigen::Index r = 0; r < g.node_cats.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < g.node_cats.cols(); ++c) row.push_back(g.node_cats(r, c));
      node_cats.push_back(std::move(row));
    }
    json rec = {{"num_nodes", g.num_nodes},
                {"edges", std::move(edges)},
                {"node_cats", std::move(node_cats)},
                {"edge_cats", std::move(edge_cats)}};
    if (g.positions) {
      json pos = json::array();
      for (Eigen::Index r = 0; r < g.positions->rows(); ++r) {
        pos.push_back({(*g.positions)(r, 0), (*g.positions)(r, 1), (*g.positions)(r, 2)});
      }
      rec["positions"] = std::move(pos);
    }
    if (g.target) rec["target"] = *g.target;
    out << rec.dump() << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file " + path);
  write_dataset(out, dataset);
}

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "graphmix/errors.hpp"

namespace graphmix {
namespace {

// Every config field is listed once here; parsing and printing both walk it.
template <typename Config, typename F>
void visit_model(Config& c, F&& f) {
  f("d_node", c.d_node);
  f("d_edge", c.d_edge);
  f("d_global", c.d_global);
  f("layers", c.layers);
  f("heads", c.heads);
  f("kernels", c.kernels);
  f("k_lap", c.k_lap);
  f("k_rw", c.k_rw);
  f("encoder_latent", c.encoder_latent);
  f("embed_dim", c.embed_dim);
  f("max_spd", c.max_spd);
  f("max_degree", c.max_degree);
  f("mlp_expansion", c.mlp_expansion);
  f("layer_norm_eps", c.layer_norm_eps);
  f("mu_max", c.mu_max);
  f("sigma_init", c.sigma_init);
  f("dropout_message", c.dropout_message);
  f("dropout_node", c.dropout_node);
  f("dropout_global", c.dropout_global);
  f("dropout_attention", c.dropout_attention);
  f("dropout_encoder", c.dropout_encoder);
  f("dropout_ffn", c.dropout_ffn);
  f("graph_dropout_max", c.graph_dropout_max);
  f("use_mpnn", c.use_mpnn);
  f("use_edge_features", c.use_edge_features);
  f("use_global_features", c.use_global_features);
  f("use_sender_aggregation", c.use_sender_aggregation);
  f("use_adjacent_node_aggregation", c.use_adjacent_node_aggregation);
  f("use_mhsa", c.use_mhsa);
  f("use_ffn", c.use_ffn);
  f("use_spd_bias", c.use_spd_bias);
  f("use_3d_bias", c.use_3d_bias);
  f("use_3d_centrality", c.use_3d_centrality);
  f("use_lap_pe", c.use_lap_pe);
  f("use_rwse", c.use_rwse);
  f("use_local_centrality", c.use_local_centrality);
  f("use_bond_lengths", c.use_bond_lengths);
  f("per_layer_bias", c.per_layer_bias);
}

template <typename Config, typename F>
void visit_train(Config& c, F&& f) {
  f("peak_lr", c.peak_lr);
  f("warmup_epochs", c.warmup_epochs);
  f("total_epochs", c.total_epochs);
  f("max_steps", c.max_steps);
  f("packs_per_step", c.packs_per_step);
  f("grad_clip", c.grad_clip);
  f("p_corrupt", c.p_corrupt);
  f("loss_weights", c.loss_weights);
  f("masking_ratio", c.masking_ratio);
  f("adam_beta1", c.adam_beta1);
  f("adam_beta2", c.adam_beta2);
  f("adam_eps", c.adam_eps);
  f("seed", c.seed);
  f("ce_corrupted_only", c.ce_corrupted_only);
  f("pad_to_spec", c.pad_to_spec);
  f("pack_max_nodes", c.pack.max_nodes);
  f("pack_max_edges", c.pack.max_edges);
  f("pack_max_graphs", c.pack.max_graphs);
}

[[noreturn]] void bad(const ConfigValue& v, const std::string& key, const std::string& what) {
  throw ConfigError("line " + std::to_string(v.line) + ": " + key + ": " + what);
}

template <typename T>
T parse_integer(const std::string& s, const ConfigValue& v, const std::string& key) {
  T out{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) bad(v, key, "expected an integer, got '" + s + "'");
  return out;
}

double parse_real(const std::string& s, const ConfigValue& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    bad(v, key, "expected a number, got '" + s + "'");
  }
}

void assign(const ConfigValue& v, const std::string& key, std::int32_t& out) {
  if (v.is_array || v.is_string) bad(v, key, "expected an integer");
  out = parse_integer<std::int32_t>(v.text, v, key);
}
void assign(const ConfigValue& v, const std::string& key, std::int64_t& out) {
  if (v.is_array || v.is_string) bad(v, key, "expected an integer");
  out = parse_integer<std::int64_t>(v.text, v, key);
}
void assign(const ConfigValue& v, const std::string& key, std::uint64_t& out) {
  if (v.is_array || v.is_string) bad(v, key, "expected an integer");
  out = parse_integer<std::uint64_t>(v.text, v, key);
}
void assign(const ConfigValue& v, const std::string& key, double& out) {
  if (v.is_array || v.is_string) bad(v, key, "expected a number");
  out = parse_real(v.text, v, key);
}
void assign(const ConfigValue& v, const std::string& key, bool& out) {
  if (v.text == "true" && !v.is_string) {
    out = true;
  } else if (v.text == "false" && !v.is_string) {
    out = false;
  } else {
    bad(v, key, "expected true or false");
  }
}
void assign(const ConfigValue& v, const std::string& key, std::array<double, 3>& out) {
  if (!v.is_array || v.items.size() != 3) bad(v, key, "expected an array of 3 numbers");
  for (std::size_t i = 0; i < 3; ++i) out[i] = parse_real(v.items[i], v, key);
}

std::string format(std::int32_t x) { return std::to_string(x); }
std::string format(std::int64_t x) { return std::to_string(x); }
std::string format(std::uint64_t x) { return std::to_string(x); }
std::string format(bool x) { return x ? "true" : "false"; }
std::string format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
std::string format(const std::array<double, 3>& a) {
  return "[" + format(a[0]) + ", " + format(a[1]) + ", " + format(a[2]) + "]";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r < 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1)");
}

}  // namespace

void ModelConfig::validate() const {
  const std::pair<const char*, std::int32_t> sizes[] = {
      {"d_node", d_node},       {"d_edge", d_edge},       {"d_global", d_global},
      {"layers", layers},       {"heads", heads},         {"kernels", kernels},
      {"k_lap", k_lap},         {"k_rw", k_rw},           {"encoder_latent", encoder_latent},
      {"embed_dim", embed_dim}, {"max_spd", max_spd},     {"max_degree", max_degree},
      {"mlp_expansion", mlp_expansion}};
  for (const auto& [name, v] : sizes) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  }
  if (d_node % heads != 0) throw ConfigError("d_node must be divisible by heads");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
  check_rate(dropout_message, "dropout_message");
  check_rate(dropout_node, "dropout_node");
  check_rate(dropout_global, "dropout_global");
  check_rate(dropout_attention, "dropout_attention");
  check_rate(dropout_encoder, "dropout_encoder");
  check_rate(dropout_ffn, "dropout_ffn");
  check_rate(graph_dropout_max, "graph_dropout_max");
}

void TrainConfig::validate() const {
  if (!(peak_lr > 0.0)) throw ConfigError("peak_lr must be positive");
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be nonnegative");
  if (total_epochs <= 0) throw ConfigError("total_epochs must be positive");
  if (warmup_epochs >= total_epochs) throw ConfigError("warmup_epochs must be below total_epochs");
  if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
  if (packs_per_step <= 0) throw ConfigError("packs_per_step must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (!(p_corrupt >= 0.0 && p_corrupt <= 1.0)) throw ConfigError("p_corrupt must lie in [0, 1]");
  for (double w : loss_weights)
    if (!(w >= 0.0)) throw ConfigError("loss_weights must be nonnegative");
  double total = 0.0;
  for (double r : masking_ratio) {
    if (!(r >= 0.0)) throw ConfigError("masking_ratio entries must be nonnegative");
    total += r;
  }
  if (!(total > 0.0)) throw ConfigError("masking_ratio must not be all zero");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (pack.max_nodes <= 0 || pack.max_edges <= 0 || pack.max_graphs <= 0) {
    throw ConfigError("pack limits must be positive");
  }
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s;
    bool quoted = false;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      s.push_back(ch);
    }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": empty key or value");
    }
    ConfigValue v;
    v.line = line;
    if (val.front() == '[') {
      if (val.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
      v.is_array = true;
      std::stringstream items(val.substr(1, val.size() - 2));
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) v.items.push_back(item);
      }
    } else if (val.front() == '"') {
      if (val.size() < 2 || val.back() != '"') {
        throw ConfigError("line " + std::to_string(line) + ": unterminated string");
      }
      v.is_string = true;
      v.text = val.substr(1, val.size() - 2);
    } else {
      v.text = val;
    }
    if (!out.emplace(key, std::move(v)).second) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key " + key);
    }
  }
  return out;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(const ConfigMap& values, ModelConfig* model, TrainConfig* train) {
  std::set<std::string> known;
  ModelConfig scratch_model;
  TrainConfig scratch_train;
  auto setter = [&](const char* name, auto& field) {
    known.insert(name);
    if (auto it = values.find(name); it != values.end()) assign(it->second, name, field);
  };
  visit_model(model ? *model : scratch_model, setter);
  visit_train(train ? *train : scratch_train, setter);
  for (const auto& [key, v] : values) {
    if (!known.count(key)) {
      throw ConfigError("line " + std::to_string(v.line) + ": unknown config key '" + key + "'");
    }
  }
}

std::string to_config_text(const ModelConfig& model) {
  std::string out;
  visit_model(model, [&](const char* name, const auto& field) {
    out += std::string(name) + " = " + format(field) + "\n";
  });
  return out;
}

std::string to_config_text(const TrainConfig& train) {
  std::string out;
  visit_train(train, [&](const char* name, const auto& field) {
    out += std::string(name) + " = " + format(field) + "\n";
  });
  return out;
}

}  // namespace graphmix

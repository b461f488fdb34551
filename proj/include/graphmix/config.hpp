// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Model and training configuration plus a small reader for flat TOML-style
// files: one `key = value` per line, `#` comments, values are numbers,
// true/false, "strings" or [arrays]. Section headers are accepted and ignored.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphmix/encodings.hpp"
#include "graphmix/packer.hpp"

namespace graphmix {

struct ModelConfig {
  std::int32_t d_node = 256;
  std::int32_t d_edge = 128;
  std::int32_t d_global = 64;
  std::int32_t layers = 16;
  std::int32_t heads = 32;
  std::int32_t kernels = 128;  // K Gaussian kernels
  std::int32_t k_lap = 7;
  std::int32_t k_rw = 16;
  std::int32_t encoder_latent = 32;
  std::int32_t embed_dim = 64;
  std::int32_t max_spd = 20;
  std::int32_t max_degree = 8;
  std::int32_t mlp_expansion = 4;  // hidden width of MLP_node/edge/global and FFN
  double layer_norm_eps = 1e-5;
  double mu_max = 12.0;
  double sigma_init = 0.5;

  double dropout_message = 0.0035;
  double dropout_node = 0.3;
  double dropout_global = 0.35;
  double dropout_attention = 0.3;
  double dropout_encoder = 0.18;
  double dropout_ffn = 0.0;
  double graph_dropout_max = 0.3;

  bool use_mpnn = true;
  bool use_edge_features = true;
  bool use_global_features = true;
  bool use_sender_aggregation = true;
  bool use_adjacent_node_aggregation = true;
  bool use_mhsa = true;
  bool use_ffn = true;
  bool use_spd_bias = true;
  bool use_3d_bias = true;
  bool use_3d_centrality = true;
  bool use_lap_pe = true;
  bool use_rwse = true;
  bool use_local_centrality = true;
  bool use_bond_lengths = true;
  /// Separate SPD table and 3D-bias MLP per layer instead of one shared set.
  bool per_layer_bias = false;

  /// Throws ConfigError on non-positive sizes, d_node % heads != 0 or rates
  /// outside [0, 1).
  void validate() const;
  EncodingOptions encoding_options() const { return {k_lap, k_rw, max_spd, max_degree}; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double peak_lr = 4e-4;
  std::int32_t warmup_epochs = 10;
  std::int32_t total_epochs = 50;
  /// Stops early after this many optimizer steps; 0 means no limit.
  std::int64_t max_steps = 0;
  std::int32_t packs_per_step = 1;
  double grad_clip = 5.0;
  double p_corrupt = 0.01;
  std::array<double, 3> loss_weights = {1.0, 1.2, 1.2};
  std::array<double, 3> masking_ratio = {1.0, 3.0, 1.0};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  /// Reconstruction loss over corrupted entries only instead of all entries.
  bool ce_corrupted_only = false;
  bool pad_to_spec = false;
  PackSpec pack{};

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Raw parsed values, keyed by name; arrays keep their element text.
struct ConfigValue {
  std::string text;
  std::vector<std::string> items;
  bool is_array = false;
  bool is_string = false;
  std::size_t line = 0;
};
using ConfigMap = std::map<std::string, ConfigValue>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

/// Applies every recognised key to the two configs; unknown keys raise
/// ConfigError. Either output may be null to skip its keys (they are then
/// still rejected if they belong to neither).
void apply_config(const ConfigMap& values, ModelConfig* model, TrainConfig* train);

std::string to_config_text(const ModelConfig& model);
std::string to_config_text(const TrainConfig& train);

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// The hybrid MPNN / biased-attention network: input encoder, a stack of
// blocks (message passing, attention, feed-forward), a sum-pool decoder and
// categorical reconstruction heads.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphmix/batch.hpp"
#include "graphmix/config.hpp"
#include "graphmix/diff.hpp"
#include "graphmix/graph.hpp"
#include "graphmix/param_store.hpp"
#include "graphmix/rng.hpp"

namespace graphmix {

/// Which input feature group is hidden for a sample. Spatial covers the 3D
/// node features, 3D edge features and 3D attention bias; topological covers
/// the SPD attention bias.
enum class MaskingGroup : std::uint8_t { MaskSpatial = 0, MaskTopological = 1, NoMask = 2 };

const char* to_string(MaskingGroup g);

enum class Init : std::uint8_t { Glorot, Embedding, Zeros, Ones, KernelCentres, KernelWidths };

struct ParamSpec {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Init init = Init::Glorot;
};

/// Every learnable tensor the configuration implies, in a fixed order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& config, const Vocabulary& vocab);

/// Number of learnable scalars; walks the layout without allocating tensors.
std::size_t count_params(const ModelConfig& config, const Vocabulary& vocab);

/// Glorot-uniform dense weights, N(0, 0.02) embeddings, zero biases, unit
/// LayerNorm gains, kernel centres on a uniform grid over [0, mu_max] and
/// widths sigma_init.
ParamStore init_params(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);

struct EncodedInputs {
  DiffArray X0;  // N × d_node
  DiffArray E0;  // M × d_edge; undefined without edge features
  DiffArray g0;  // G × d_global; undefined without global features
  /// P × heads pair biases (B^SPD + B^3D); one entry, or one per layer when
  /// the bias tables are per layer. Empty without attention.
  std::vector<DiffArray> bias;
  MaskingGroup group = MaskingGroup::NoMask;
};

struct MpnnOutput {
  DiffArray Y;
  DiffArray E;
  DiffArray g;
};

struct BlockOutput {
  DiffArray X;
  DiffArray E;
  DiffArray g;
};

struct ForwardOptions {
  MaskingGroup group = MaskingGroup::NoMask;
  /// Null means evaluation: every dropout is the identity.
  RngStream* rng = nullptr;
  /// Keep X after every block in ForwardOutput::layer_nodes.
  bool record_layers = false;
};

struct ForwardOutput {
  DiffArray prediction;  // num_graphs × 1 (padding slot included when padded)
  std::vector<DiffArray> node_logits;  // per node column, N × vocab
  std::vector<DiffArray> edge_logits;  // per edge column, M × vocab
  DiffArray X;
  DiffArray E;
  DiffArray g;
  std::vector<DiffArray> layer_nodes;
};

class HybridModel {
 public:
  HybridModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed);
  /// Adopts `params`, which must match the layout name for name and shape
  /// (LoadError otherwise).
  HybridModel(ModelConfig config, Vocabulary vocab, const ParamStore& params);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Builds X⁰, E⁰, g⁰ and the attention bias. Groups other than MaskSpatial
  /// need positions (MaskingError otherwise); MaskSpatial never reads them.
  EncodedInputs encode_inputs(const PackedBatch& batch, MaskingGroup group, RngStream* rng) const;

  /// `layer` is 0-based.
  MpnnOutput mpnn_layer(const DiffArray& X, const DiffArray& E, const DiffArray& g, int layer,
                        const PackedBatch& batch, RngStream* rng) const;
  DiffArray biased_attention(const DiffArray& X, const DiffArray& bias, int layer,
                             const PackedBatch& batch, RngStream* rng) const;
  DiffArray ffn(const DiffArray& X, int layer, const PackedBatch& batch, RngStream* rng) const;
  BlockOutput hybrid_block(const DiffArray& X, const DiffArray& E, const DiffArray& g,
                        const DiffArray& bias, int layer, const PackedBatch& batch,
                        RngStream* rng) const;
  /// Per-slot sum over valid nodes followed by the two-layer decoder MLP.
  DiffArray decode(const DiffArray& X, const PackedBatch& batch) const;

  ForwardOutput forward(const PackedBatch& batch, const ForwardOptions& options = {}) const;

  /// Checkpoint: "GMXC", u32 version, config text, vocabulary, parameter store.
  void save(const std::string& path) const;
  static HybridModel load(const std::string& path);

 private:
  const DiffArray& p(const std::string& name) const { return params_.get(name); }
  DiffArray mlp(const DiffArray& x, const std::string& prefix) const;
  DiffArray mlp_encoder(const DiffArray& x, const std::string& prefix, RngStream* rng) const;
  DiffArray linear(const DiffArray& x, const std::string& prefix) const;
  DiffArray embed_sum(const CatMatrix& cats, const std::string& prefix,
                      const std::vector<std::int32_t>& vocab) const;
  double graph_dropout_rate(int layer) const;

  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
};

/// Group sampled from `ratio` (MaskSpatial, MaskTopological, NoMask).
MaskingGroup sample_masking_group(RngStream& rng, const std::array<double, 3>& ratio);

/// Evaluation group: NoMask when every graph has positions, else MaskSpatial.
MaskingGroup eval_masking_group(const PackedBatch& batch);

}  // namespace graphmix

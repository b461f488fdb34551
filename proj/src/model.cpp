// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "graphmix/binary_io.hpp"
#include "graphmix/encodings.hpp"
#include "graphmix/errors.hpp"

namespace graphmix {
namespace {

std::string layer_prefix(int layer) { return "layer" + std::to_string(layer) + "/"; }

bool needs_kernels(const ModelConfig& c) {
  return c.use_3d_centrality || (c.use_edge_features && c.use_bond_lengths) ||
         (c.use_mhsa && c.use_3d_bias);
}

std::string bias_scope(const ModelConfig& c, int layer) {
  return c.per_layer_bias ? layer_prefix(layer) + "bias/" : std::string("encoder/bias/");
}

Index node_input_width(const ModelConfig& c) {
  Index w = c.d_node;
  if (c.use_lap_pe) w += 2 * c.encoder_latent;
  if (c.use_rwse) w += c.encoder_latent;
  if (c.use_local_centrality) w += c.embed_dim;
  if (c.use_3d_centrality) w += c.encoder_latent;
  return w;
}

Index node_aggregate_width(const ModelConfig& c) {
  Index w = c.d_node;
  if (c.use_edge_features) w += c.use_sender_aggregation ? 2 * c.d_edge : c.d_edge;
  if (c.use_adjacent_node_aggregation) w += c.use_sender_aggregation ? 2 * c.d_node : c.d_node;
  if (c.use_global_features) w += c.d_global;
  return w;
}

class LayoutBuilder {
 public:
  explicit LayoutBuilder(std::vector<ParamSpec>& out) : out_(out) {}

  void tensor(const std::string& name, Index rows, Index cols, Init init) {
    out_.push_back({name, rows, cols, init});
  }
  void dense(const std::string& prefix, Index in, Index out, bool bias = true) {
    tensor(prefix + "/w", in, out, Init::Glorot);
    if (bias) tensor(prefix + "/b", 1, out, Init::Zeros);
  }
  void norm(const std::string& prefix, Index dim) {
    tensor(prefix + "/gamma", 1, dim, Init::Ones);
    tensor(prefix + "/beta", 1, dim, Init::Zeros);
  }
  // Dense → GELU → LayerNorm → Dense, hidden width expansion·d.
  void mlp(const std::string& prefix, Index in, Index d, Index expansion) {
    dense(prefix + "/dense1", in, expansion * d);
    norm(prefix + "/norm", expansion * d);
    dense(prefix + "/dense2", expansion * d, d);
  }
  // LayerNorm → Dense(2h) → ReLU → LayerNorm → Dense(latent).
  void mlp_encoder(const std::string& prefix, Index h, Index latent) {
    norm(prefix + "/norm_in", h);
    dense(prefix + "/dense1", h, 2 * h);
    norm(prefix + "/norm_mid", 2 * h);
    dense(prefix + "/dense2", 2 * h, latent);
  }

 private:
  std::vector<ParamSpec>& out_;
};

}  // namespace

const char* to_string(MaskingGroup g) {
  switch (g) {
    case MaskingGroup::MaskSpatial:
      return "mask_spatial";
    case MaskingGroup::MaskTopological:
      return "mask_topological";
    case MaskingGroup::NoMask:
      return "no_mask";
  }
  return "unknown";
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& c, const Vocabulary& vocab) {
  c.validate();
  std::vector<ParamSpec> out;
  LayoutBuilder b(out);
  const Index x = c.mlp_expansion;

  for (std::size_t col = 0; col < vocab.node.size(); ++col) {
    b.tensor("encoder/atom/embed/col" + std::to_string(col), vocab.node[col], c.embed_dim,
             Init::Embedding);
  }
  b.mlp("encoder/atom/mlp", c.embed_dim, c.d_node, x);
  if (c.use_lap_pe) {
    b.mlp_encoder("encoder/lap_vec", c.k_lap, c.encoder_latent);
    b.mlp_encoder("encoder/lap_val", c.k_lap, c.encoder_latent);
  }
  if (c.use_rwse) b.mlp_encoder("encoder/random_walk", c.k_rw, c.encoder_latent);
  if (c.use_local_centrality) {
    b.tensor("encoder/centrality/embed", c.max_degree + 1, c.embed_dim, Init::Embedding);
  }
  if (needs_kernels(c)) {
    b.tensor("encoder/kernels/mu", 1, c.kernels, Init::KernelCentres);
    b.tensor("encoder/kernels/sigma", 1, c.kernels, Init::KernelWidths);
  }
  if (c.use_3d_centrality) b.dense("encoder/centrality_3d", c.kernels, c.encoder_latent, false);
  b.dense("encoder/node_in", node_input_width(c), c.d_node);

  if (c.use_edge_features) {
    for (std::size_t col = 0; col < vocab.edge.size(); ++col) {
      b.tensor("encoder/bond/embed/col" + std::to_string(col), vocab.edge[col], c.embed_dim,
               Init::Embedding);
    }
    b.mlp("encoder/bond/mlp", c.embed_dim, c.d_edge, x);
    if (c.use_bond_lengths) b.mlp_encoder("encoder/bond_length", c.kernels, c.encoder_latent);
    b.dense("encoder/edge_in", c.d_edge + (c.use_bond_lengths ? c.encoder_latent : 0), c.d_edge);
  }
  if (c.use_global_features) b.tensor("encoder/global/embed", 1, c.d_global, Init::Embedding);

  auto bias_tables = [&](const std::string& scope) {
    if (c.use_spd_bias) b.tensor(scope + "spd/table", c.max_spd + 2, c.heads, Init::Embedding);
    if (c.use_3d_bias) {
      b.dense(scope + "bias3d/dense1", c.kernels, c.kernels);
      b.dense(scope + "bias3d/dense2", c.kernels, c.heads);
    }
  };
  if (c.use_mhsa && !c.per_layer_bias) bias_tables(bias_scope(c, 0));

  for (int l = 0; l < c.layers; ++l) {
    const std::string pre = layer_prefix(l);
    if (c.use_mpnn) {
      if (c.use_edge_features) {
        const Index in = 2 * c.d_node + c.d_edge + (c.use_global_features ? c.d_global : 0);
        b.mlp(pre + "mpnn/edge_mlp", in, c.d_edge, x);
      }
      b.mlp(pre + "mpnn/node_mlp", node_aggregate_width(c), c.d_node, x);
      if (c.use_global_features) {
        const Index in = c.d_global + c.d_node + (c.use_edge_features ? c.d_edge : 0);
        b.mlp(pre + "mpnn/global_mlp", in, c.d_global, x);
      }
      b.norm(pre + "mpnn/norm", c.d_node);
    }
    if (c.use_mhsa) {
      if (c.per_layer_bias) bias_tables(bias_scope(c, l));
      for (const char* w : {"query", "key", "value", "out"}) {
        b.dense(pre + "attn/" + w, c.d_node, c.d_node);
      }
    }
    if (c.use_ffn) {
      b.dense(pre + "ffn/dense1", c.d_node, x * c.d_node);
      b.dense(pre + "ffn/dense2", x * c.d_node, c.d_node);
    }
  }

  b.dense("decoder/dense1", c.d_node, c.d_node);
  b.dense("decoder/dense2", c.d_node, 1);
  for (std::size_t col = 0; col < vocab.node.size(); ++col) {
    b.dense("heads/node/col" + std::to_string(col), c.d_node, vocab.node[col]);
  }
  if (c.use_edge_features) {
    for (std::size_t col = 0; col < vocab.edge.size(); ++col) {
      b.dense("heads/edge/col" + std::to_string(col), c.d_edge, vocab.edge[col]);
    }
  }
  return out;
}

std::size_t count_params(const ModelConfig& config, const Vocabulary& vocab) {
  std::size_t n = 0;
  for (const auto& s : parameter_layout(config, vocab)) {
    n += static_cast<std::size_t>(s.rows * s.cols);
  }
  return n;
}

ParamStore init_params(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed) {
  const auto layout = parameter_layout(config, vocab);
  const RngStream base(seed, 0x696e6974ULL);
  ParamStore store;
  for (std::size_t t = 0; t < layout.size(); ++t) {
    const ParamSpec& s = layout[t];
    RngStream rng = base.derive(t);
    Matrix m(s.rows, s.cols);
    switch (s.init) {
      case Init::Glorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
        break;
      }
      case Init::Embedding:
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = 0.02 * rng.normal();
        break;
      case Init::Zeros:
        m.setZero();
        break;
      case Init::Ones:
        m.setOnes();
        break;
      case Init::KernelCentres:
        for (Index k = 0; k < s.cols; ++k) {
          m(0, k) = s.cols > 1 ? config.mu_max * static_cast<double>(k) /
                                     static_cast<double>(s.cols - 1)
                               : 0.0;
        }
        break;
      case Init::KernelWidths:
        m.setConstant(config.sigma_init);
        break;
    }
    store.add(s.name, std::move(m));
  }
  return store;
}

MaskingGroup sample_masking_group(RngStream& rng, const std::array<double, 3>& ratio) {
  const double total = ratio[0] + ratio[1] + ratio[2];
  if (!(total > 0.0)) throw ConfigError("masking ratio must not be all zero");
  const double u = rng.uniform() * total;
  if (u < ratio[0]) return MaskingGroup::MaskSpatial;
  if (u < ratio[0] + ratio[1]) return MaskingGroup::MaskTopological;
  if (ratio[2] > 0.0) return MaskingGroup::NoMask;
  // Rounding at the upper edge: fall back to the last group with weight.
  return ratio[1] > 0.0 ? MaskingGroup::MaskTopological : MaskingGroup::MaskSpatial;
}

MaskingGroup eval_masking_group(const PackedBatch& batch) {
  return batch.has_positions() ? MaskingGroup::NoMask : MaskingGroup::MaskSpatial;
}

// ---------------------------------------------------------------------------
// HybridModel
// ---------------------------------------------------------------------------

HybridModel::HybridModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)),
      params_(init_params(config_, vocab_, seed)) {}

HybridModel::HybridModel(ModelConfig config, Vocabulary vocab, const ParamStore& params)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(init_params(config_, vocab_, 0)) {
  params_.assign_values(params);
}

double HybridModel::graph_dropout_rate(int layer) const {
  return static_cast<double>(layer + 1) / static_cast<double>(config_.layers) *
         config_.graph_dropout_max;
}

namespace {

DiffArray maybe_dropout(const DiffArray& x, double rate, RngStream* rng) {
  if (rng == nullptr || rate == 0.0) return x;
  return dropout(x, rate, *rng);
}

DiffArray maybe_graph_dropout(const DiffArray& x, double rate, const PackedBatch& batch,
                              RngStream* rng) {
  if (rng == nullptr || rate == 0.0) return x;
  return graph_dropout(x, rate, batch.node_graph, batch.num_graphs, *rng);
}

}  // namespace

DiffArray HybridModel::linear(const DiffArray& x, const std::string& prefix) const {
  const std::string bias = prefix + "/b";
  return dense(x, p(prefix + "/w"), params_.contains(bias) ? p(bias) : DiffArray());
}

DiffArray HybridModel::mlp(const DiffArray& x, const std::string& prefix) const {
  DiffArray h = gelu(linear(x, prefix + "/dense1"));
  h = layer_norm(h, p(prefix + "/norm/gamma"), p(prefix + "/norm/beta"), config_.layer_norm_eps);
  return linear(h, prefix + "/dense2");
}

DiffArray HybridModel::mlp_encoder(const DiffArray& x, const std::string& prefix,
                                RngStream* rng) const {
  const double eps = config_.layer_norm_eps;
  DiffArray h = layer_norm(x, p(prefix + "/norm_in/gamma"), p(prefix + "/norm_in/beta"), eps);
  h = relu(linear(h, prefix + "/dense1"));
  h = layer_norm(h, p(prefix + "/norm_mid/gamma"), p(prefix + "/norm_mid/beta"), eps);
  return maybe_dropout(linear(h, prefix + "/dense2"), config_.dropout_encoder, rng);
}

DiffArray HybridModel::embed_sum(const CatMatrix& cats, const std::string& prefix,
                              const std::vector<std::int32_t>& vocab) const {
  if (cats.cols() != static_cast<Index>(vocab.size())) {
    throw ShapeError("embed_sum: " + std::to_string(cats.cols()) + " category columns, " +
                     std::to_string(vocab.size()) + " expected");
  }
  DiffArray sum;
  std::vector<Index> ids(static_cast<std::size_t>(cats.rows()));
  for (Index c = 0; c < cats.cols(); ++c) {
    for (Index r = 0; r < cats.rows(); ++r) ids[r] = cats(r, c);
    DiffArray e = embed(p(prefix + "/col" + std::to_string(c)), ids);
    sum = sum.defined() ? add(sum, e) : e;
  }
  if (!sum.defined()) sum = DiffArray::zeros(cats.rows(), config_.embed_dim);
  return sum;
}

EncodedInputs HybridModel::encode_inputs(const PackedBatch& batch, MaskingGroup group,
                                      RngStream* rng) const {
  const ModelConfig& c = config_;
  if (group != MaskingGroup::MaskSpatial && !batch.has_positions()) {
    throw MaskingError(std::string("masking group ") + to_string(group) +
                       " needs 3D positions, but the batch has graphs without them");
  }
  const Index n = batch.num_nodes;
  const Index m = batch.num_edges;
  const bool spatial = group != MaskingGroup::MaskSpatial;

  DiffArray psi;
  if (spatial && needs_kernels(c)) {
    const DiffArray pos = DiffArray::constant(batch.positions());
    psi = gaussian_kernels(pairwise_distance(pos, batch.pair_i, batch.pair_j),
                           p("encoder/kernels/mu"), p("encoder/kernels/sigma"), kMinSigma);
  }

  EncodedInputs out;
  out.group = group;

  std::vector<DiffArray> parts;
  parts.push_back(maybe_dropout(mlp(embed_sum(batch.node_cats, "encoder/atom/embed", vocab_.node),
                                    "encoder/atom/mlp"),
                                c.dropout_encoder, rng));
  if (c.use_lap_pe) {
    parts.push_back(mlp_encoder(DiffArray::constant(batch.lap_vec), "encoder/lap_vec", rng));
    parts.push_back(mlp_encoder(DiffArray::constant(batch.lap_val), "encoder/lap_val", rng));
  }
  if (c.use_rwse) {
    parts.push_back(mlp_encoder(DiffArray::constant(batch.random_walk), "encoder/random_walk", rng));
  }
  if (c.use_local_centrality) parts.push_back(embed(p("encoder/centrality/embed"), batch.degree));
  if (c.use_3d_centrality) {
    if (spatial) {
      parts.push_back(
          linear(scatter_add_rows(psi, batch.pair_i, n), "encoder/centrality_3d"));
    } else {
      parts.push_back(DiffArray::zeros(n, c.encoder_latent));
    }
  }
  out.X0 = linear(concat_cols(parts), "encoder/node_in");

  if (c.use_edge_features) {
    std::vector<DiffArray> eparts;
    eparts.push_back(
        maybe_dropout(mlp(embed_sum(batch.edge_cats, "encoder/bond/embed", vocab_.edge),
                          "encoder/bond/mlp"),
                      c.dropout_encoder, rng));
    if (c.use_bond_lengths) {
      if (spatial) {
        std::vector<Index> rows(static_cast<std::size_t>(m));
        Matrix valid = Matrix::Zero(m, c.encoder_latent);
        for (Index k = 0; k < m; ++k) {
          rows[k] = batch.edge_pair[k] >= 0 ? batch.edge_pair[k] : 0;
          if (batch.edge_valid[k]) valid.row(k).setOnes();
        }
        DiffArray e3d = mlp_encoder(gather_rows(psi, rows), "encoder/bond_length", rng);
        eparts.push_back(mul(e3d, DiffArray::constant(std::move(valid))));
      } else {
        eparts.push_back(DiffArray::zeros(m, c.encoder_latent));
      }
    }
    out.E0 = linear(concat_cols(eparts), "encoder/edge_in");
  }

  if (c.use_global_features) {
    const std::vector<Index> zeros(static_cast<std::size_t>(batch.num_graphs), 0);
    out.g0 = embed(p("encoder/global/embed"), zeros);
  }

  if (c.use_mhsa) {
    const int scopes = c.per_layer_bias ? c.layers : 1;
    const Index pairs = static_cast<Index>(batch.pair_i.size());
    for (int s = 0; s < scopes; ++s) {
      const std::string scope = bias_scope(c, s);
      DiffArray bias;
      if (c.use_spd_bias && group != MaskingGroup::MaskTopological) {
        bias = embed(p(scope + "spd/table"), batch.pair_spd);
      }
      if (c.use_3d_bias && spatial) {
        DiffArray b3d = linear(gelu(linear(psi, scope + "bias3d/dense1")), scope + "bias3d/dense2");
        bias = bias.defined() ? add(bias, b3d) : b3d;
      }
      if (!bias.defined()) bias = DiffArray::zeros(pairs, c.heads);
      out.bias.push_back(bias);
    }
  }
  return out;
}

MpnnOutput HybridModel::mpnn_layer(const DiffArray& X, const DiffArray& E, const DiffArray& g,
                                int layer, const PackedBatch& batch, RngStream* rng) const {
  const ModelConfig& c = config_;
  const std::string pre = layer_prefix(layer) + "mpnn/";
  const Index n = batch.num_nodes;
  const Index gcount = batch.num_graphs;

  const DiffArray x_src = gather_rows(X, batch.edge_src);
  const DiffArray x_dst = gather_rows(X, batch.edge_dst);

  DiffArray ebar;
  if (c.use_edge_features) {
    std::vector<DiffArray> msg = {x_src, x_dst, E};
    if (c.use_global_features) msg.push_back(gather_rows(g, batch.edge_graph));
    ebar = maybe_dropout(mlp(concat_cols(msg), pre + "edge_mlp"), c.dropout_message, rng);
  }

  // [x_i | Σ_(u,i) ē_ui | Σ_(i,v) ē_iv | Σ_(u,i) x_u | Σ_(i,v) x_v | g]
  std::vector<DiffArray> agg = {X};
  if (c.use_edge_features) {
    if (c.use_sender_aggregation) agg.push_back(scatter_add_rows(ebar, batch.edge_dst, n));
    agg.push_back(scatter_add_rows(ebar, batch.edge_src, n));
  }
  if (c.use_adjacent_node_aggregation) {
    if (c.use_sender_aggregation) agg.push_back(scatter_add_rows(x_src, batch.edge_dst, n));
    agg.push_back(scatter_add_rows(x_dst, batch.edge_src, n));
  }
  if (c.use_global_features) agg.push_back(gather_rows(g, batch.node_graph));
  const DiffArray xbar = mlp(concat_cols(agg), pre + "node_mlp");

  MpnnOutput out;
  if (c.use_global_features) {
    std::vector<DiffArray> gparts = {g, scatter_add_rows(xbar, batch.node_graph, gcount)};
    if (c.use_edge_features) gparts.push_back(scatter_add_rows(ebar, batch.edge_graph, gcount));
    const DiffArray gbar = mlp(concat_cols(gparts), pre + "global_mlp");
    out.g = add(maybe_dropout(gbar, c.dropout_global, rng), g);
  } else {
    out.g = g;
  }
  out.Y = layer_norm(add(maybe_dropout(xbar, c.dropout_node, rng), X), p(pre + "norm/gamma"),
                     p(pre + "norm/beta"), c.layer_norm_eps);
  out.E = c.use_edge_features ? add(ebar, E) : E;
  return out;
}

DiffArray HybridModel::biased_attention(const DiffArray& X, const DiffArray& bias, int layer,
                                     const PackedBatch& batch, RngStream* rng) const {
  const ModelConfig& c = config_;
  const std::string pre = layer_prefix(layer) + "attn/";
  const Index n = batch.num_nodes;
  const Index dh = c.d_node / c.heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  const DiffArray q = linear(X, pre + "query");
  const DiffArray k = linear(X, pre + "key");
  const DiffArray v = linear(X, pre + "value");
  std::vector<DiffArray> heads;
  heads.reserve(static_cast<std::size_t>(c.heads));
  for (Index h = 0; h < c.heads; ++h) {
    DiffArray logits = scale(matmul_nt(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh)),
                             scale_factor);
    logits = add(logits, pair_square(bias, h, batch.pair_i, batch.pair_j, n));
    DiffArray attn = maybe_dropout(masked_softmax(logits, batch.same_graph), c.dropout_attention, rng);
    heads.push_back(matmul(attn, slice_cols(v, h * dh, dh)));
  }
  const DiffArray mixed = linear(concat_cols(heads), pre + "out");
  return add(maybe_graph_dropout(mixed, graph_dropout_rate(layer), batch, rng), X);
}

DiffArray HybridModel::ffn(const DiffArray& X, int layer, const PackedBatch& batch,
                        RngStream* rng) const {
  const std::string pre = layer_prefix(layer) + "ffn/";
  const DiffArray h =
      maybe_dropout(gelu(linear(X, pre + "dense1")), config_.dropout_ffn, rng);
  return add(maybe_graph_dropout(linear(h, pre + "dense2"), graph_dropout_rate(layer), batch, rng),
             X);
}

BlockOutput HybridModel::hybrid_block(const DiffArray& X, const DiffArray& E, const DiffArray& g,
                                const DiffArray& bias, int layer, const PackedBatch& batch,
                                RngStream* rng) const {
  const ModelConfig& c = config_;
  BlockOutput out{X, E, g};
  DiffArray mixed;
  if (c.use_mpnn) {
    MpnnOutput m = mpnn_layer(X, E, g, layer, batch, rng);
    mixed = m.Y;
    out.E = m.E;
    out.g = m.g;
  }
  if (c.use_mhsa) {
    DiffArray z = biased_attention(X, bias, layer, batch, rng);
    mixed = mixed.defined() ? add(mixed, z) : z;
  }
  if (!mixed.defined()) mixed = X;
  out.X = c.use_ffn ? ffn(mixed, layer, batch, rng) : mixed;
  return out;
}

DiffArray HybridModel::decode(const DiffArray& X, const PackedBatch& batch) const {
  std::vector<Index> rows, slots;
  for (Index i = 0; i < batch.num_nodes; ++i) {
    if (batch.node_valid[i]) {
      rows.push_back(i);
      slots.push_back(batch.node_graph[i]);
    }
  }
  const DiffArray pooled = scatter_add_rows(gather_rows(X, rows), slots, batch.num_graphs);
  return linear(gelu(linear(pooled, "decoder/dense1")), "decoder/dense2");
}

ForwardOutput HybridModel::forward(const PackedBatch& batch, const ForwardOptions& options) const {
  const ModelConfig& c = config_;
  const EncodedInputs enc = encode_inputs(batch, options.group, options.rng);
  ForwardOutput out;
  DiffArray X = enc.X0, E = enc.E0, g = enc.g0;
  for (int l = 0; l < c.layers; ++l) {
    const DiffArray bias =
        c.use_mhsa ? enc.bias[c.per_layer_bias ? static_cast<std::size_t>(l) : 0] : DiffArray();
    BlockOutput b = hybrid_block(X, E, g, bias, l, batch, options.rng);
    X = b.X;
    E = b.E;
    g = b.g;
    if (options.record_layers) out.layer_nodes.push_back(X);
  }
  out.prediction = decode(X, batch);
  for (std::size_t col = 0; col < vocab_.node.size(); ++col) {
    out.node_logits.push_back(linear(X, "heads/node/col" + std::to_string(col)));
  }
  if (c.use_edge_features) {
    for (std::size_t col = 0; col < vocab_.edge.size(); ++col) {
      out.edge_logits.push_back(linear(E, "heads/edge/col" + std::to_string(col)));
    }
  }
  out.X = X;
  out.E = E;
  out.g = g;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr char kCheckpointMagic[4] = {'G', 'P', 'S', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_ints(std::ostream& out, const std::vector<std::int32_t>& v) {
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  for (auto x : v) bin::write_pod<std::int32_t>(out, x);
}

std::vector<std::int32_t> read_ints(std::istream& in) {
  const auto n = bin::read_pod<std::uint32_t>(in, "vocabulary size");
  if (n > 4096) throw LoadError("implausible vocabulary column count");
  std::vector<std::int32_t> v(n);
  for (auto& x : v) x = bin::read_pod<std::int32_t>(in, "vocabulary entry");
  return v;
}
}  // namespace

void HybridModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, 4);
  bin::write_pod<std::uint32_t>(out, kCheckpointVersion);
  bin::write_string(out, to_config_text(config_));
  write_ints(out, vocab_.node);
  write_ints(out, vocab_.edge);
  params_.write(out);
  if (!out) throw ConfigError("failed writing checkpoint " + path);
}

HybridModel HybridModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw LoadError(path + ": not a checkpoint (bad magic)");
  }
  if (bin::read_pod<std::uint32_t>(in, "version") != kCheckpointVersion) {
    throw LoadError(path + ": unsupported checkpoint version");
  }
  ModelConfig config;
  try {
    apply_config(parse_config_text(bin::read_string(in, "config")), &config, nullptr);
    config.validate();
  } catch (const ConfigError& e) {
    throw LoadError(path + ": stored config is invalid: " + e.what());
  }
  Vocabulary vocab;
  vocab.node = read_ints(in);
  vocab.edge = read_ints(in);
  const ParamStore stored = ParamStore::read(in);
  try {
    return HybridModel(config, vocab, stored);
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "graphmix/errors.hpp"

namespace graphmix {
namespace {

// Replacement drawn uniformly from the other V − 1 categories.
std::int32_t different_category(std::int32_t old, std::int32_t vocab, RngStream& rng) {
  auto draw = static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(vocab - 1)));
  return draw >= old ? draw + 1 : draw;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::size_t CorruptionMask::changed() const {
  std::size_t n = 0;
  for (Index i = 0; i < nodes.size(); ++i) n += nodes.data()[i] != 0;
  for (Index i = 0; i < edges.size(); ++i) n += edges.data()[i] != 0;
  return n;
}

CorruptionMask corrupt_categories(CatMatrix& node_cats, CatMatrix& edge_cats,
                                  std::span<const Index> edge_reverse,
                                  std::span<const std::uint8_t> node_valid,
                                  std::span<const std::uint8_t> edge_valid,
                                  const Vocabulary& vocab, double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p_corrupt must lie in [0, 1]");
  if (node_cats.cols() != static_cast<Index>(vocab.node.size()) ||
      edge_cats.cols() != static_cast<Index>(vocab.edge.size())) {
    throw ShapeError("corrupt_categories: category columns do not match the vocabulary");
  }
  CorruptionMask mask;
  mask.nodes = CatMatrix::Zero(node_cats.rows(), node_cats.cols());
  mask.edges = CatMatrix::Zero(edge_cats.rows(), edge_cats.cols());
  if (p == 0.0) return mask;

  for (Index r = 0; r < node_cats.rows(); ++r) {
    if (!node_valid.empty() && !node_valid[r]) continue;
    for (Index c = 0; c < node_cats.cols(); ++c) {
      const std::int32_t vocab_c = vocab.node[c];
      if (vocab_c < 2 || !rng.bernoulli(p)) continue;
      node_cats(r, c) = different_category(node_cats(r, c), vocab_c, rng);
      mask.nodes(r, c) = 1;
    }
  }
  for (Index k = 0; k < edge_cats.rows(); ++k) {
    if (!edge_valid.empty() && !edge_valid[k]) continue;
    const Index rev = edge_reverse.empty() ? k : edge_reverse[k];
    if (rev < k) {
      edge_cats.row(k) = edge_cats.row(rev);
      mask.edges.row(k) = mask.edges.row(rev);
      continue;
    }
    for (Index c = 0; c < edge_cats.cols(); ++c) {
      const std::int32_t vocab_c = vocab.edge[c];
      if (vocab_c < 2 || !rng.bernoulli(p)) continue;
      edge_cats(k, c) = different_category(edge_cats(k, c), vocab_c, rng);
      mask.edges(k, c) = 1;
    }
  }
  return mask;
}

MolecularGraph corrupt_features(const MolecularGraph& g, const Vocabulary& vocab, double p,
                                RngStream& rng, CorruptionMask* mask) {
  MolecularGraph out = g;
  const auto rev32 = reverse_edge_index(g);
  const std::vector<Index> rev(rev32.begin(), rev32.end());
  CorruptionMask m = corrupt_categories(out.node_cats, out.edge_cats, rev, {}, {}, vocab, p, rng);
  if (mask != nullptr) *mask = std::move(m);
  return out;
}

CorruptionMask corrupt_batch(PackedBatch& batch, const Vocabulary& vocab, double p,
                             RngStream& rng) {
  return corrupt_categories(batch.node_cats, batch.edge_cats, batch.edge_reverse,
                            batch.node_valid, batch.edge_valid, vocab, p, rng);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

namespace {

// Mean CE over (valid row, column) pairs, optionally restricted to mask != 0.
DiffArray mean_cross_entropy(const std::vector<DiffArray>& logits, const CatMatrix& labels,
                             std::span<const std::uint8_t> valid, const CatMatrix* only,
                             double* value) {
  DiffArray sum;
  std::size_t count = 0;
  std::vector<Index> col_labels(static_cast<std::size_t>(labels.rows()));
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(labels.rows()));
  for (std::size_t c = 0; c < logits.size(); ++c) {
    for (Index r = 0; r < labels.rows(); ++r) {
      col_labels[r] = labels(r, static_cast<Index>(c));
      rows[r] = valid[r] && (only == nullptr || (*only)(r, static_cast<Index>(c)) != 0);
      count += rows[r];
    }
    DiffArray term = cross_entropy_sum(logits[c], col_labels, rows);
    sum = sum.defined() ? add(sum, term) : term;
  }
  if (count == 0) {
    *value = 0.0;
    return DiffArray();
  }
  DiffArray mean = scale(sum, 1.0 / static_cast<double>(count));
  *value = mean.item();
  return mean;
}

}  // namespace

LossTerms composite_loss(const ForwardOutput& out, const PackedBatch& batch,
                         const std::array<double, 3>& weights, const CorruptionMask* corrupted) {
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
  LossTerms t;
  DiffArray total;
  auto accumulate = [&](const DiffArray& term, double w) {
    if (!term.defined() || w == 0.0) return;
    DiffArray scaled = w == 1.0 ? term : scale(term, w);
    total = total.defined() ? add(total, scaled) : scaled;
  };

  std::vector<Index> slots;
  Matrix targets(0, 1);
  for (Index s = 0; s < batch.num_graphs; ++s) {
    if (batch.graph_valid[s] && batch.has_target[s]) slots.push_back(s);
  }
  t.labelled_graphs = slots.size();
  if (!slots.empty()) {
    targets.resize(static_cast<Index>(slots.size()), 1);
    for (std::size_t k = 0; k < slots.size(); ++k) targets(k, 0) = batch.targets[slots[k]];
    DiffArray mae = mean_all(abs(sub(gather_rows(out.prediction, slots),
                                     DiffArray::constant(std::move(targets)))));
    t.mae = mae.item();
    accumulate(mae, weights[0]);
  }

  if (!out.node_logits.empty()) {
    accumulate(mean_cross_entropy(out.node_logits, batch.clean_node_cats, batch.node_valid,
                                  corrupted ? &corrupted->nodes : nullptr, &t.ce_nodes),
               weights[1]);
  }
  if (!out.edge_logits.empty() && batch.num_edges > 0) {
    accumulate(mean_cross_entropy(out.edge_logits, batch.clean_edge_cats, batch.edge_valid,
                                  corrupted ? &corrupted->edges : nullptr, &t.ce_edges),
               weights[2]);
  }
  t.total = total.defined() ? total : DiffArray::zeros(1, 1);
  return t;
}

// ---------------------------------------------------------------------------
// Optimiser
// ---------------------------------------------------------------------------

double learning_rate(std::int64_t step, std::int64_t warmup_steps, std::int64_t total_steps,
                     double peak) {
  const double t = static_cast<double>(step);
  const double warm = warmup_steps > 0 ? t / static_cast<double>(warmup_steps) : 1.0;
  double decay = 1.0;
  if (total_steps > warmup_steps) {
    decay = std::max(0.0, 1.0 - (t - static_cast<double>(warmup_steps)) /
                                    static_cast<double>(total_steps - warmup_steps));
  }
  return peak * std::min(warm, decay);
}

double adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& config) {
  const auto& names = params.names();
  double sq = 0.0;
  for (const auto& name : names) {
    const Matrix& g = params.get(name).grad();
    if (!g.allFinite()) throw NumericError("non-finite gradient in " + name);
    sq += g.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double clip =
      config.grad_clip > 0.0 && norm > config.grad_clip ? config.grad_clip / norm : 1.0;

  if (state.m.empty()) {
    for (const auto& name : names) {
      const Matrix& v = params.get(name).value();
      state.m.push_back(Matrix::Zero(v.rows(), v.cols()));
      state.v.push_back(Matrix::Zero(v.rows(), v.cols()));
    }
  }
  ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < names.size(); ++t) {
    DiffArray& p = params.get(names[t]);
    const Matrix g = p.grad() * clip;
    state.m[t] = b1 * state.m[t] + (1.0 - b1) * g;
    state.v[t] = b2 * state.v[t] + (1.0 - b2) * g.cwiseProduct(g);
    p.value_mut().array() -= lr * (state.m[t].array() / c1) /
                             ((state.v[t].array() / c2).sqrt() + config.adam_eps);
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

std::vector<double> predict(const HybridModel& model, const Dataset& dataset,
                            const std::vector<GraphFeatures>& features,
                            std::span<const std::size_t> indices, const PackSpec& spec) {
  if (features.size() != dataset.graphs.size()) {
    throw ConfigError("predict: features do not match the dataset");
  }
  std::vector<double> out(indices.size(), std::numeric_limits<double>::quiet_NaN());
  CollateOptions opts;
  opts.spec = spec;
  opts.max_spd = model.config().max_spd;
  for (bool with_positions : {true, false}) {
    std::vector<std::size_t> order, where;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (dataset.graphs.at(indices[k]).positions.has_value() == with_positions) {
        order.push_back(indices[k]);
        where.push_back(k);
      }
    }
    if (order.empty()) continue;
    std::size_t cursor = 0;
    for (const Pack& pack : pack_stream(dataset.graphs, order, spec)) {
      std::vector<GraphView> views;
      for (std::size_t id : pack.graph_ids) views.push_back({&dataset.graphs[id], &features[id], id});
      const PackedBatch batch = collate(views, opts);
      ForwardOptions fo;
      fo.group = eval_masking_group(batch);
      const ForwardOutput fwd = model.forward(batch, fo);
      for (Index s = 0; s < batch.real_graphs; ++s) out[where[cursor++]] = fwd.prediction.value()(s, 0);
    }
  }
  return out;
}

double evaluate_mae(const HybridModel& model, const Dataset& dataset,
                    const std::vector<GraphFeatures>& features,
                    std::span<const std::size_t> indices, const PackSpec& spec) {
  std::vector<std::size_t> labelled;
  for (std::size_t i : indices) {
    if (dataset.graphs.at(i).target.has_value()) labelled.push_back(i);
  }
  if (labelled.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> pred = predict(model, dataset, features, labelled, spec);
  double sum = 0.0;
  for (std::size_t k = 0; k < labelled.size(); ++k) {
    sum += std::abs(pred[k] - *dataset.graphs[labelled[k]].target);
  }
  return sum / static_cast<double>(labelled.size());
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

std::string metrics_csv(const std::vector<EpochMetrics>& log) {
  std::string s = "epoch,step,split,mae,loss,loss_mae,loss_ce_nodes,loss_ce_edges,lr\n";
  for (const auto& m : log) {
    const std::string tail = "," + fmt_double(m.loss) + "," + fmt_double(m.loss_mae) + "," +
                             fmt_double(m.loss_ce_nodes) + "," + fmt_double(m.loss_ce_edges) +
                             "," + fmt_double(m.lr) + "\n";
    const std::string head = std::to_string(m.epoch) + "," + std::to_string(m.step) + ",";
    s += head + "train," + fmt_double(m.train_mae) + tail;
    s += head + "eval," + fmt_double(m.eval_mae) + tail;
  }
  return s;
}

namespace {

void write_outputs(const std::string& dir, const TrainResult& r, const TrainConfig& tc) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  r.model.save((fs::path(dir) / "model.ckpt").string());
  {
    std::ofstream csv(fs::path(dir) / "metrics.csv");
    csv << metrics_csv(r.log);
    if (!csv) throw ConfigError("cannot write metrics.csv in " + dir);
  }
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  nlohmann::json j;
  j["steps"] = r.steps;
  j["epochs"] = r.log.empty() ? 0 : r.log.back().epoch + 1;
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_reason"] = r.abort_reason;
  j["seed"] = tc.seed;
  j["parameters"] = r.model.params().num_scalars();
  if (!r.log.empty()) {
    j["final_train_mae"] = num(r.log.back().train_mae);
    j["final_eval_mae"] = num(r.log.back().eval_mae);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : r.log) {
      if (std::isfinite(m.eval_mae)) best = std::min(best, m.eval_mae);
    }
    j["best_eval_mae"] = num(best);
  }
  std::ofstream out(fs::path(dir) / "summary.json");
  out << j.dump(2) << "\n";
  if (!out) throw ConfigError("cannot write summary.json in " + dir);
}

}  // namespace

TrainResult train(const Dataset& dataset, const std::vector<GraphFeatures>& features,
                  const DatasetSplit& split, const ModelConfig& model_config,
                  const TrainConfig& tc, const TrainOptions& options) {
  model_config.validate();
  tc.validate();
  if (features.size() != dataset.graphs.size()) {
    throw ConfigError("train: features do not match the dataset");
  }
  if (split.train_indices.empty()) throw ConfigError("train: empty training split");
  for (std::size_t i : split.train_indices) {
    if (!dataset.graphs.at(i).target.has_value()) {
      throw ValidationError("training graph " + std::to_string(i) + " has no target");
    }
  }

  TrainResult result{HybridModel(model_config, dataset.vocab, tc.seed), {}, 0, false, {}};
  HybridModel& model = result.model;
  ParamStore& params = model.params();
  AdamState adam;
  std::vector<Matrix> last_good;  // values before the most recent update

  const auto packs_per_epoch = static_cast<std::int64_t>(
      pack_stream(dataset.graphs, split.train_indices, tc.pack).size());
  const std::int64_t steps_per_epoch = (packs_per_epoch + tc.packs_per_step - 1) / tc.packs_per_step;
  const std::int64_t total_steps = steps_per_epoch * tc.total_epochs;
  const std::int64_t warmup_steps = steps_per_epoch * tc.warmup_epochs;

  CollateOptions copts;
  copts.pad_to_spec = tc.pad_to_spec;
  copts.spec = tc.pack;
  copts.max_spd = model_config.max_spd;

  bool stop = false;
  for (std::int32_t epoch = 0; epoch < tc.total_epochs && !stop; ++epoch) {
    RngStream erng(tc.seed, mix_keys({0x65706f6368ULL, static_cast<std::uint64_t>(epoch)}));
    std::vector<std::size_t> order = split.train_indices;
    shuffle(order, erng);
    const std::vector<Pack> packs = pack_stream(dataset.graphs, order, tc.pack);

    EpochMetrics em;
    em.epoch = epoch;
    std::size_t loss_count = 0;
    for (std::size_t first = 0; first < packs.size() && !stop; first += tc.packs_per_step) {
      const std::size_t last = std::min(packs.size(), first + tc.packs_per_step);
      const double share = 1.0 / static_cast<double>(last - first);
      params.zero_grad();
      for (std::size_t k = first; k < last; ++k) {
        RngStream prng = erng.derive(k + 1);
        std::vector<GraphView> views;
        for (std::size_t id : packs[k].graph_ids) {
          views.push_back({&dataset.graphs[id], &features[id], id});
        }
        copts.eig_sign_rng = &prng;
        PackedBatch batch = collate(views, copts);
        ForwardOptions fo;
        fo.group = batch.has_positions() ? sample_masking_group(prng, tc.masking_ratio)
                                         : MaskingGroup::MaskSpatial;
        fo.rng = &prng;
        const CorruptionMask cmask = corrupt_batch(batch, dataset.vocab, tc.p_corrupt, prng);
        LossTerms loss;
        double value = std::numeric_limits<double>::quiet_NaN();
        try {
          const ForwardOutput out = model.forward(batch, fo);
          loss = composite_loss(out, batch, tc.loss_weights, tc.ce_corrupted_only ? &cmask : nullptr);
          value = loss.total.item();
        } catch (const NumericError&) {
          // Finite checks fire inside the forward pass; same outcome as a NaN loss.
        }
        if (!std::isfinite(value)) {
          // The current parameters produced the bad loss; roll back one update.
          if (!last_good.empty()) {
            for (std::size_t t = 0; t < last_good.size(); ++t) {
              params.get(params.names()[t]).value_mut() = last_good[t];
            }
          }
          result.aborted = true;
          result.abort_reason = "non-finite loss at step " + std::to_string(result.steps + 1) +
                                " (epoch " + std::to_string(epoch) + ")";
          stop = true;
          break;
        }
        em.loss += value;
        em.loss_mae += loss.mae;
        em.loss_ce_nodes += loss.ce_nodes;
        em.loss_ce_edges += loss.ce_edges;
        ++loss_count;
        (share == 1.0 ? loss.total : scale(loss.total, share)).backward();
      }
      if (stop) break;
      em.lr = learning_rate(result.steps + 1, warmup_steps, total_steps, tc.peak_lr);
      last_good.resize(params.size());
      for (std::size_t t = 0; t < params.size(); ++t) {
        last_good[t] = params.get(params.names()[t]).value();
      }
      try {
        adam_step(params, adam, em.lr, tc);
      } catch (const NumericError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        stop = true;
        break;
      }
      ++result.steps;
      if (tc.max_steps > 0 && result.steps >= tc.max_steps) stop = true;
    }
    if (loss_count > 0) {
      const double inv = 1.0 / static_cast<double>(loss_count);
      em.loss *= inv;
      em.loss_mae *= inv;
      em.loss_ce_nodes *= inv;
      em.loss_ce_edges *= inv;
    }
    em.step = result.steps;
    const bool last_epoch = stop || epoch + 1 == tc.total_epochs;
    if (last_epoch || (epoch + 1) % std::max(1, options.eval_every) == 0) {
      em.train_mae = evaluate_mae(model, dataset, features, split.train_indices, tc.pack);
      em.eval_mae = evaluate_mae(model, dataset, features, split.eval_indices, tc.pack);
    } else {
      em.train_mae = em.eval_mae = std::numeric_limits<double>::quiet_NaN();
    }
    result.log.push_back(em);
    if (options.on_epoch) options.on_epoch(em);
    if (options.stop_train_mae > 0.0 && em.train_mae < options.stop_train_mae) stop = true;
  }

  if (!options.out_dir.empty()) write_outputs(options.out_dir, result, tc);
  return result;
}

}  // namespace graphmix

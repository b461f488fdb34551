// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Noisy-feature corruption, the composite loss, Adam with a warmup/linear
// decay schedule, and the train / evaluate / predict loops.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "graphmix/batch.hpp"
#include "graphmix/config.hpp"
#include "graphmix/graph.hpp"
#include "graphmix/model.hpp"

namespace graphmix {

/// 1 where an entry was replaced; same shape as the category matrix.
struct CorruptionMask {
  CatMatrix nodes;
  CatMatrix edges;
  std::size_t changed() const;
};

/// Replaces each entry with probability p by a uniformly drawn different
/// category of its column. Columns with vocabulary 1 are left alone. Edge k
/// with reverse r < k copies the categories drawn for r.
CorruptionMask corrupt_categories(CatMatrix& node_cats, CatMatrix& edge_cats,
                                  std::span<const Index> edge_reverse,
                                  std::span<const std::uint8_t> node_valid,
                                  std::span<const std::uint8_t> edge_valid,
                                  const Vocabulary& vocab, double p, RngStream& rng);

/// Graph-level convenience wrapper; topology, positions and target are copied as is.
MolecularGraph corrupt_features(const MolecularGraph& g, const Vocabulary& vocab, double p,
                                RngStream& rng, CorruptionMask* mask = nullptr);

/// Batch version used by the training loop; clean categories stay in
/// `clean_node_cats` / `clean_edge_cats`.
CorruptionMask corrupt_batch(PackedBatch& batch, const Vocabulary& vocab, double p,
                             RngStream& rng);

struct LossTerms {
  DiffArray total;
  double mae = 0.0;
  double ce_nodes = 0.0;
  double ce_edges = 0.0;
  std::size_t labelled_graphs = 0;
};

/// weights[0]·MAE + weights[1]·CE_nodes + weights[2]·CE_edges. Each CE is the
/// mean over (valid entry, column) pairs against the clean categories; with
/// `corrupted` set only corrupted pairs count. Empty terms contribute 0.
LossTerms composite_loss(const ForwardOutput& out, const PackedBatch& batch,
                         const std::array<double, 3>& weights,
                         const CorruptionMask* corrupted = nullptr);

/// peak·min(t/warmup, max(0, 1 − (t − warmup)/(total − warmup))) with 1-based t.
double learning_rate(std::int64_t step, std::int64_t warmup_steps, std::int64_t total_steps,
                     double peak);

struct AdamState {
  std::vector<Matrix> m, v;
  std::int64_t step = 0;
};

/// Clips the global gradient norm to `clip` (0 disables) and applies one Adam
/// update with learning rate `lr`. Returns the pre-clip norm. Throws
/// NumericError naming the tensor if any gradient is non-finite; parameters
/// are untouched in that case.
double adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& config);

struct EpochMetrics {
  std::int32_t epoch = 0;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double loss_mae = 0.0;
  double loss_ce_nodes = 0.0;
  double loss_ce_edges = 0.0;
  double train_mae = 0.0;
  double eval_mae = 0.0;  // NaN when the eval split has no labels
};

struct TrainOptions {
  /// When set, the final (or last good) checkpoint, metrics.csv and
  /// summary.json are written here.
  std::string out_dir;
  /// Evaluates train/eval MAE every this many epochs (and at the end).
  std::int32_t eval_every = 1;
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Stop once train MAE falls below this value (0 disables).
  double stop_train_mae = 0.0;
};

struct TrainResult {
  HybridModel model;
  std::vector<EpochMetrics> log;
  std::int64_t steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

TrainResult train(const Dataset& dataset, const std::vector<GraphFeatures>& features,
                  const DatasetSplit& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TrainOptions& options = {});

/// Predictions in the order of `indices`. Graphs with and without positions
/// are packed separately so each pack gets a single evaluation masking group
/// and a graph's prediction does not depend on its pack mates.
std::vector<double> predict(const HybridModel& model, const Dataset& dataset,
                            const std::vector<GraphFeatures>& features,
                            std::span<const std::size_t> indices, const PackSpec& spec = {});

/// MAE over the labelled graphs among `indices`; NaN if none are labelled.
double evaluate_mae(const HybridModel& model, const Dataset& dataset,
                    const std::vector<GraphFeatures>& features,
                    std::span<const std::size_t> indices, const PackSpec& spec = {});

/// CSV with one row per epoch and split: epoch,step,split,mae,loss,...
std::string metrics_csv(const std::vector<EpochMetrics>& log);

}  // namespace graphmix

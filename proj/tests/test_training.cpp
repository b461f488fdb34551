// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphmix/errors.hpp"
#include "graphmix/training.hpp"
#include "test_util.hpp"

using namespace graphmix;
using namespace graphmix::testing;

namespace {

// Two graphs: 3 + 2 nodes, one padding node, two real directed edges.
PackedBatch scripted_batch() {
  PackedBatch b;
  b.num_nodes = 6;
  b.num_edges = 3;
  b.num_graphs = 3;
  b.real_graphs = 2;
  b.graph_valid = {1, 1, 0};
  b.has_target = {1, 1, 0};
  b.targets = {1.5, -0.25, 0.0};
  b.node_valid = {1, 1, 1, 1, 1, 0};
  b.node_graph = {0, 0, 0, 1, 1, 2};
  b.edge_valid = {1, 1, 0};
  b.clean_node_cats = CatMatrix(6, 2);
  b.clean_node_cats << 0, 1, 2, 0, 1, 1, 0, 0, 2, 1, 0, 0;
  b.clean_edge_cats = CatMatrix(3, 1);
  b.clean_edge_cats << 1, 0, 0;
  return b;
}

ForwardOutput scripted_output() {
  ForwardOutput o;
  Matrix pred(3, 1);
  pred << 1.0, 0.5, 99.0;
  o.prediction = DiffArray::constant(pred);
  Matrix c0(6, 3), c1(6, 2), e0(3, 2);
  c0 << 0.1, -0.3, 2.0, 1.0, 0.0, 0.5, -1.0, 0.2, 0.3, 0.0, 0.0, 0.0, 3.0, -2.0, 1.0, 50, 50, 50;
  c1 << 0.4, -0.4, 1.2, 0.1, 0.0, 0.0, -0.7, 0.9, 2.0, 1.0, 9, 9;
  e0 << 0.3, 0.6, -1.5, 2.5, 7, 7;
  o.node_logits = {DiffArray::constant(c0), DiffArray::constant(c1)};
  o.edge_logits = {DiffArray::constant(e0)};
  return o;
}

double log_softmax_at(const Matrix& logits, Index r, Index label) {
  double m = logits.row(r).maxCoeff(), s = 0.0;
  for (Index c = 0; c < logits.cols(); ++c) s += std::exp(logits(r, c) - m);
  return logits(r, label) - m - std::log(s);
}

}  // namespace

TEST(Corruption, ZeroProbabilityIsIdentity) {
  const MolecularGraph g = random_graph(1, 0, 6, 12);
  RngStream rng(1, 1);
  CorruptionMask mask;
  const MolecularGraph c = corrupt_features(g, set1_vocabulary(), 0.0, rng, &mask);
  EXPECT_TRUE(c == g);
  EXPECT_EQ(mask.changed(), 0u);
}

TEST(Corruption, CertainCorruptionFlipsEveryEntry) {
  Vocabulary vocab{{2, 1, 5}, {2}};
  MolecularGraph g;
  g.num_nodes = 3;
  g.edges = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  g.node_cats = CatMatrix(3, 3);
  g.node_cats << 0, 0, 4, 1, 0, 2, 0, 0, 0;
  g.edge_cats = CatMatrix(4, 1);
  g.edge_cats << 0, 0, 1, 1;
  g.positions = Positions::Random(3, 3);
  g.target = 2.0;
  RngStream rng(2, 2);
  CorruptionMask mask;
  const MolecularGraph c = corrupt_features(g, vocab, 1.0, rng, &mask);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(c.node_cats(i, 0), 1 - g.node_cats(i, 0));  // binary column flips
    EXPECT_EQ(c.node_cats(i, 1), 0);                      // vocabulary 1 never changes
    EXPECT_NE(c.node_cats(i, 2), g.node_cats(i, 2));
    EXPECT_EQ(mask.nodes(i, 1), 0);
  }
  EXPECT_EQ(c.edge_cats(0, 0), 1);
  EXPECT_EQ(c.edge_cats(1, 0), c.edge_cats(0, 0));  // reverse edges stay tied
  EXPECT_EQ(c.edge_cats(3, 0), c.edge_cats(2, 0));
  EXPECT_EQ(c.edges, g.edges);
  EXPECT_EQ(*c.positions, *g.positions);
  EXPECT_EQ(*c.target, *g.target);
}

TEST(Corruption, RateAndUniformReplacement) {
  const Vocabulary vocab{{6}, {}};
  CatMatrix nodes = CatMatrix::Constant(1000000, 1, 2);
  CatMatrix edges(0, 0);
  RngStream rng(3, 3);
  const CorruptionMask m = corrupt_categories(nodes, edges, {}, {}, {}, vocab, 0.01, rng);
  const double rate = static_cast<double>(m.changed()) / 1e6;
  EXPECT_NEAR(rate, 0.01, 0.001);
  std::array<int, 6> counts{};
  for (Index i = 0; i < nodes.rows(); ++i) {
    if (m.nodes(i, 0)) ++counts[nodes(i, 0)];
  }
  EXPECT_EQ(counts[2], 0);
  const double expect = static_cast<double>(m.changed()) / 5.0;
  for (int c : {0, 1, 3, 4, 5}) EXPECT_NEAR(counts[c], expect, 5.0 * std::sqrt(expect));
}

TEST(Masking, GroupFrequencies) {
  RngStream rng(4, 4);
  std::array<int, 3> counts{};
  for (int i = 0; i < 1000000; ++i) ++counts[static_cast<int>(sample_masking_group(rng, {1, 3, 1}))];
  EXPECT_NEAR(counts[0] / 1e6, 0.2, 0.005);
  EXPECT_NEAR(counts[1] / 1e6, 0.6, 0.005);
  EXPECT_NEAR(counts[2] / 1e6, 0.2, 0.005);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample_masking_group(rng, {1, 0, 0}), MaskingGroup::MaskSpatial);
  }
}

TEST(Loss, MatchesScriptedOracle) {
  const PackedBatch b = scripted_batch();
  const ForwardOutput o = scripted_output();
  // MAE over the two labelled graphs.
  const double mae = (std::abs(1.0 - 1.5) + std::abs(0.5 + 0.25)) / 2.0;
  double ce_n = 0.0;
  int n_pairs = 0;
  for (Index r = 0; r < 5; ++r) {
    ce_n -= log_softmax_at(o.node_logits[0].value(), r, b.clean_node_cats(r, 0));
    ce_n -= log_softmax_at(o.node_logits[1].value(), r, b.clean_node_cats(r, 1));
    n_pairs += 2;
  }
  ce_n /= n_pairs;
  const double ce_e = -(log_softmax_at(o.edge_logits[0].value(), 0, 1) +
                        log_softmax_at(o.edge_logits[0].value(), 1, 0)) /
                      2.0;
  const LossTerms t = composite_loss(o, b, {1.0, 1.2, 1.2});
  EXPECT_NEAR(t.mae, mae, 1e-15);
  EXPECT_NEAR(t.ce_nodes, ce_n, 1e-12);
  EXPECT_NEAR(t.ce_edges, ce_e, 1e-12);
  EXPECT_NEAR(t.total.item(), mae + 1.2 * ce_n + 1.2 * ce_e, 1e-10);
  // Weights (1, 0, 0) give the MAE exactly.
  EXPECT_EQ(composite_loss(o, b, {1.0, 0.0, 0.0}).total.item(), t.mae);
}

TEST(Loss, CorruptedOnlyRestrictsPairs) {
  const PackedBatch b = scripted_batch();
  const ForwardOutput o = scripted_output();
  CorruptionMask m;
  m.nodes = CatMatrix::Zero(6, 2);
  m.edges = CatMatrix::Zero(3, 1);
  m.nodes(2, 1) = 1;
  m.nodes(5, 0) = 1;  // padding row never counts
  const LossTerms t = composite_loss(o, b, {0.0, 1.0, 1.0}, &m);
  EXPECT_NEAR(t.ce_nodes, -log_softmax_at(o.node_logits[1].value(), 2, 1), 1e-14);
  EXPECT_EQ(t.ce_edges, 0.0);
  EXPECT_NEAR(t.total.item(), t.ce_nodes, 1e-15);
}

TEST(Loss, UniformLogitsGiveLogV) {
  PackedBatch b = scripted_batch();
  ForwardOutput o = scripted_output();
  o.node_logits = {DiffArray::constant(Matrix::Zero(6, 3)), DiffArray::constant(Matrix::Zero(6, 2))};
  const LossTerms t = composite_loss(o, b, {0, 1, 0});
  EXPECT_NEAR(t.ce_nodes, 0.5 * (std::log(3.0) + std::log(2.0)), 1e-14);
}

TEST(Schedule, WarmupAndLinearDecay) {
  EXPECT_DOUBLE_EQ(learning_rate(100, 100, 1000, 4e-4), 4e-4);
  EXPECT_DOUBLE_EQ(learning_rate(50, 100, 1000, 4e-4), 2e-4);
  EXPECT_DOUBLE_EQ(learning_rate(1000, 100, 1000, 4e-4), 0.0);
  EXPECT_DOUBLE_EQ(learning_rate(550, 100, 1000, 4e-4), 2e-4);
  EXPECT_DOUBLE_EQ(learning_rate(1, 0, 10, 1.0), 0.9);
}

TEST(Adam, ClipsToGlobalNorm) {
  ParamStore s;
  s.add("a", Matrix::Zero(1, 2));
  s.add("b", Matrix::Zero(2, 1));
  s.get("a").grad_mut() = (Matrix(1, 2) << 30.0, 0.0).finished();
  s.get("b").grad_mut() = (Matrix(2, 1) << 0.0, 40.0).finished();
  AdamState st;
  TrainConfig tc;
  const double norm = adam_step(s, st, 1e-3, tc);
  EXPECT_DOUBLE_EQ(norm, 50.0);
  const double clipped = std::sqrt(st.m[0].squaredNorm() + st.m[1].squaredNorm()) / (1.0 - tc.adam_beta1);
  EXPECT_NEAR(clipped, 5.0, 1e-9);
}

TEST(Adam, NonFiniteGradientLeavesParametersAlone) {
  ParamStore s;
  s.add("w", Matrix::Ones(2, 2));
  s.get("w").grad_mut() = Matrix::Ones(2, 2);
  s.get("w").grad_mut()(1, 1) = std::numeric_limits<double>::infinity();
  AdamState st;
  EXPECT_THROW(adam_step(s, st, 1e-3, TrainConfig{}), NumericError);
  EXPECT_EQ(s.get("w").value(), Matrix::Ones(2, 2));
}

TEST(Adam, ConvergesOnQuadratic) {
  ParamStore s;
  s.add("x", Matrix::Zero(1, 1));
  AdamState st;
  TrainConfig tc;
  for (int t = 1; t <= 500; ++t) {
    s.zero_grad();
    const DiffArray& x = s.get("x");
    const DiffArray d = sub(x, DiffArray::constant(Matrix::Constant(1, 1, 3.0)));
    mul(d, d).backward();
    adam_step(s, st, learning_rate(t, 0, 500, 0.1), tc);
  }
  EXPECT_NEAR(s.get("x").value()(0, 0), 3.0, 1e-2);
}

namespace {

struct Toy {
  Dataset ds;
  std::vector<GraphFeatures> feats;
  DatasetSplit split;
};

Toy toy_dataset(double position_fraction) {
  SyntheticOptions o;
  o.count = 12;
  o.seed = 5;
  o.position_fraction = position_fraction;
  o.valid_fraction = 0.25;
  Toy t;
  t.ds = generate_synthetic(o);
  t.feats = featurize_dataset(t.ds, toy_config().encoding_options());
  t.split = make_split(t.ds, "original", 0);
  return t;
}

TrainConfig short_run() {
  TrainConfig tc;
  tc.total_epochs = 3;
  tc.warmup_epochs = 1;
  tc.peak_lr = 1e-3;
  tc.seed = 9;
  tc.p_corrupt = 0.05;
  return tc;
}

}  // namespace

TEST(Train, RepeatRunsAreBitIdentical) {
  const Toy t = toy_dataset(1.0);
  ModelConfig mc = toy_config();
  mc.dropout_node = 0.1;
  mc.graph_dropout_max = 0.2;
  const TrainResult a = train(t.ds, t.feats, t.split, mc, short_run());
  const TrainResult b = train(t.ds, t.feats, t.split, mc, short_run());
  EXPECT_FALSE(a.aborted);
  EXPECT_EQ(metrics_csv(a.log), metrics_csv(b.log));
  EXPECT_EQ(a.log.size(), 3u);
  TrainConfig other = short_run();
  other.seed = 10;
  EXPECT_NE(metrics_csv(train(t.ds, t.feats, t.split, mc, other).log), metrics_csv(a.log));
}

TEST(Train, WritesOutputsAndRespectsMaxSteps) {
  const Toy t = toy_dataset(0.5);
  const auto dir = std::filesystem::temp_directory_path() / "graphmix_train_test";
  std::filesystem::remove_all(dir);
  TrainConfig tc = short_run();
  tc.max_steps = 2;
  TrainOptions opts;
  opts.out_dir = dir.string();
  const TrainResult r = train(t.ds, t.feats, t.split, toy_config(), tc, opts);
  EXPECT_EQ(r.steps, 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "model.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
  std::ifstream csv(dir / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,step,split,mae,loss,loss_mae,loss_ce_nodes,loss_ce_edges,lr");
  const HybridModel back = HybridModel::load((dir / "model.ckpt").string());
  EXPECT_NEAR(evaluate_mae(back, t.ds, t.feats, t.split.train_indices), r.log.back().train_mae, 1e-12);
  std::filesystem::remove_all(dir);
}

TEST(Train, DivergenceAbortsWithLastGoodCheckpoint) {
  const Toy t = toy_dataset(1.0);
  const auto dir = std::filesystem::temp_directory_path() / "graphmix_abort_test";
  std::filesystem::remove_all(dir);
  TrainConfig tc = short_run();
  tc.peak_lr = 1e300;
  tc.warmup_epochs = 0;
  TrainOptions opts;
  opts.out_dir = dir.string();
  const TrainResult r = train(t.ds, t.feats, t.split, toy_config(), tc, opts);
  EXPECT_TRUE(r.aborted);
  const HybridModel back = HybridModel::load((dir / "model.ckpt").string());
  for (const auto& name : back.params().names()) {
    EXPECT_TRUE(back.params().get(name).value().allFinite());
  }
  EXPECT_TRUE(std::isfinite(evaluate_mae(back, t.ds, t.feats, t.split.train_indices)));
  std::filesystem::remove_all(dir);
}

TEST(Predict, NoPositionsAreNeverRead) {
  SyntheticOptions o;
  o.count = 10;
  o.seed = 6;
  o.position_fraction = 0.0;
  const Dataset ds = generate_synthetic(o);
  const ModelConfig mc = toy_config();
  const auto feats = featurize_dataset(ds, mc.encoding_options());
  const HybridModel model(mc, ds.vocab, 1);
  // predict() goes through collate; batches without positions throw on any read,
  // so finishing is the access-counter check.
  const auto pred = predict(model, ds, feats, iota_indices(ds.graphs.size()));
  for (double p : pred) EXPECT_TRUE(std::isfinite(p));
}

TEST(Predict, MixedDatasetMatchesPerGraphRuns) {
  SyntheticOptions o;
  o.count = 16;
  o.seed = 7;
  o.position_fraction = 0.5;
  const Dataset ds = generate_synthetic(o);
  const ModelConfig mc = toy_config();
  const auto feats = featurize_dataset(ds, mc.encoding_options());
  const HybridModel model(mc, ds.vocab, 2);
  const auto all = iota_indices(ds.graphs.size());
  const auto pred = predict(model, ds, feats, all);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::vector<std::size_t> one = {i};
    EXPECT_NEAR(predict(model, ds, feats, one)[0], pred[i], 1e-10);
  }
}

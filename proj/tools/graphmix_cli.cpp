// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Command line front end: generate, featurize, train, predict, pack-stats,
// ensemble and count-params.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include <CLI11.hpp>

#include "graphmix/ensemble.hpp"
#include "graphmix/errors.hpp"
#include "graphmix/synthetic.hpp"
#include "graphmix/training.hpp"

namespace fs = std::filesystem;
using namespace graphmix;

namespace {

struct Configs {
  ModelConfig model;
  TrainConfig train;
};

Configs load_configs(const std::string& path) {
  Configs c;
  if (!path.empty()) apply_config(parse_config_file(path), &c.model, &c.train);
  c.model.validate();
  c.train.validate();
  return c;
}

std::vector<GraphFeatures> features_for(const Dataset& ds, const ModelConfig& model,
                                        const std::string& sidecar) {
  if (sidecar.empty()) return featurize_dataset(ds, model.encoding_options());
  EncodingOptions stored;
  auto feats = read_feature_sidecar(sidecar, &stored);
  if (!(stored == model.encoding_options())) {
    throw ConfigError(sidecar + ": feature settings differ from the model config");
  }
  if (feats.size() != ds.graphs.size()) {
    throw ConfigError(sidecar + ": graph count differs from the dataset");
  }
  return feats;
}

std::vector<std::size_t> split_indices(const Dataset& ds, const std::string& split,
                                       const std::string& part, std::uint64_t seed) {
  if (split == "all") {
    std::vector<std::size_t> all(ds.graphs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const DatasetSplit s = make_split(ds, split, seed);
  return part == "train" ? s.train_indices : s.eval_indices;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid message-passing / attention network for molecular graph regression"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic molecular dataset (JSON lines)");
  SyntheticOptions syn;
  std::string gen_out;
  gen->add_option("--count", syn.count, "Number of graphs")->capture_default_str();
  gen->add_option("--seed", syn.seed)->capture_default_str();
  gen->add_option("--position-fraction", syn.position_fraction)->capture_default_str();
  gen->add_option("--label-fraction", syn.label_fraction)->capture_default_str();
  gen->add_option("--valid-fraction", syn.valid_fraction)->capture_default_str();
  gen->add_option("--out", gen_out)->required();

  // featurize
  auto* feat = app.add_subcommand("featurize", "Precompute structural features into a sidecar");
  std::string feat_dataset, feat_config, feat_out;
  feat->add_option("--dataset", feat_dataset)->required();
  feat->add_option("--config", feat_config, "Config file (feature settings are read from it)");
  feat->add_option("--out", feat_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_config, tr_dataset, tr_split = "original", tr_out, tr_features;
  std::int64_t tr_seed = -1;
  tr->add_option("--config", tr_config);
  tr->add_option("--dataset", tr_dataset)->required();
  tr->add_option("--split", tr_split, "original | train_plus_valid | train_plus_half_valid")
      ->capture_default_str();
  tr->add_option("--seed", tr_seed, "Overrides the config seed");
  tr->add_option("--features", tr_features, "Feature sidecar from `featurize`");
  tr->add_option("--out", tr_out)->required();

  // predict
  auto* pr = app.add_subcommand("predict", "Predict with a checkpoint");
  std::string pr_ckpt, pr_dataset, pr_split = "all", pr_part = "eval", pr_out, pr_features;
  std::uint64_t pr_seed = 0;
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--dataset", pr_dataset)->required();
  pr->add_option("--split", pr_split, "all or a split name")->capture_default_str();
  pr->add_option("--part", pr_part, "train | eval")->capture_default_str();
  pr->add_option("--split-seed", pr_seed)->capture_default_str();
  pr->add_option("--features", pr_features);
  pr->add_option("--out", pr_out)->required();

  // pack-stats
  auto* ps = app.add_subcommand("pack-stats", "Packing efficiency and graphs-per-pack histogram");
  std::string ps_dataset;
  std::size_t ps_synthetic = 0;
  std::uint64_t ps_seed = 0;
  PackSpec ps_spec;
  ps->add_option("--dataset", ps_dataset);
  ps->add_option("--synthetic", ps_synthetic, "Generate this many synthetic graphs instead");
  ps->add_option("--seed", ps_seed)->capture_default_str();
  ps->add_option("--max-nodes", ps_spec.max_nodes)->capture_default_str();
  ps->add_option("--max-edges", ps_spec.max_edges)->capture_default_str();
  ps->add_option("--max-graphs", ps_spec.max_graphs)->capture_default_str();

  // ensemble
  auto* en = app.add_subcommand("ensemble", "Weighted ensemble of checkpoints or prediction files");
  std::string en_spec, en_dataset, en_split = "original", en_out;
  std::uint64_t en_seed = 0;
  en->add_option("--spec", en_spec)->required();
  en->add_option("--dataset", en_dataset)->required();
  en->add_option("--split", en_split, "Split whose eval part is scored, or all")
      ->capture_default_str();
  en->add_option("--split-seed", en_seed)->capture_default_str();
  en->add_option("--out", en_out, "Output directory")->required();

  // count-params
  auto* cp = app.add_subcommand("count-params", "Print the parameter count of a configuration");
  std::string cp_config;
  cp->add_option("--config", cp_config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      save_dataset(gen_out, generate_synthetic(syn));
      std::cout << "wrote " << syn.count << " graphs to " << gen_out << "\n";
    } else if (*feat) {
      const Configs c = load_configs(feat_config);
      const Dataset ds = load_dataset(feat_dataset);
      write_feature_sidecar(feat_out, c.model.encoding_options(),
                            featurize_dataset(ds, c.model.encoding_options()));
      std::cout << "wrote features for " << ds.graphs.size() << " graphs to " << feat_out << "\n";
    } else if (*tr) {
      Configs c = load_configs(tr_config);
      if (tr_seed >= 0) c.train.seed = static_cast<std::uint64_t>(tr_seed);
      const Dataset ds = load_dataset(tr_dataset);
      const auto feats = features_for(ds, c.model, tr_features);
      const DatasetSplit split = make_split(ds, tr_split, c.train.seed);
      TrainOptions opts;
      opts.out_dir = tr_out;
      opts.on_epoch = [](const EpochMetrics& m) {
        std::cout << "epoch " << m.epoch << " step " << m.step << " loss " << fmt(m.loss)
                  << " train_mae " << fmt(m.train_mae) << " eval_mae " << fmt(m.eval_mae) << "\n";
      };
      fs::create_directories(tr_out);
      {
        std::ofstream cfg(fs::path(tr_out) / "config.toml");
        cfg << to_config_text(c.model) << to_config_text(c.train);
      }
      const TrainResult r = train(ds, feats, split, c.model, c.train, opts);
      if (r.aborted) {
        std::cerr << "training aborted: " << r.abort_reason
                  << " (last good checkpoint saved)\n";
        return 3;
      }
    } else if (*pr) {
      const HybridModel model = HybridModel::load(pr_ckpt);
      const Dataset ds = load_dataset(pr_dataset);
      const auto feats = features_for(ds, model.config(), pr_features);
      const auto idx = split_indices(ds, pr_split, pr_part, pr_seed);
      write_predictions_csv(pr_out, idx, predict(model, ds, feats, idx));
      const double mae = evaluate_mae(model, ds, feats, idx);
      std::cout << "predicted " << idx.size() << " graphs; mae " << fmt(mae) << "\n";
    } else if (*ps) {
      Dataset ds;
      if (ps_synthetic > 0) {
        SyntheticOptions o;
        o.count = ps_synthetic;
        o.seed = ps_seed;
        ds = generate_synthetic(o);
      } else if (!ps_dataset.empty()) {
        ds = load_dataset(ps_dataset);
      } else {
        throw ConfigError("pack-stats needs --dataset or --synthetic");
      }
      std::vector<std::size_t> order(ds.graphs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto packs = pack_stream(ds.graphs, order, ps_spec);
      const PackEfficiency e = pack_efficiency(packs, ps_spec);
      std::map<std::size_t, std::size_t> hist;
      for (const auto& p : packs) ++hist[p.graph_ids.size()];
      std::cout << "metric,value\n"
                << "packs," << packs.size() << "\n"
                << "node_efficiency," << fmt(e.node_eff) << "\n"
                << "edge_efficiency," << fmt(e.edge_eff) << "\n"
                << "combined_efficiency," << fmt(e.combined_eff) << "\n"
                << "mean_graphs_per_pack," << fmt(e.mean_graphs_per_pack) << "\n\n"
                << "graphs_per_pack,count\n";
      for (const auto& [k, v] : hist) std::cout << k << "," << v << "\n";
    } else if (*en) {
      const EnsembleSpec spec = load_ensemble_spec(en_spec);
      const Dataset ds = load_dataset(en_dataset);
      const auto idx = split_indices(ds, en_split, "eval", en_seed);
      const EnsembleReport r = ensemble_eval(spec, ds, idx);
      fs::create_directories(en_out);
      write_predictions_csv((fs::path(en_out) / "predictions.csv").string(), r.graph_ids,
                            r.prediction);
      const std::string summary = ensemble_summary_json(spec, r);
      std::ofstream(fs::path(en_out) / "summary.json") << summary;
      std::cout << summary;
    } else if (*cp) {
      const Configs c = load_configs(cp_config);
      std::cout << count_params(c.model, set1_vocabulary()) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

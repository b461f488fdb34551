// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "graphmix/errors.hpp"
#include "graphmix/model.hpp"
#include "graphmix/training.hpp"

namespace graphmix {

void EnsembleSpec::validate() const {
  if (members.empty()) throw ConfigError("ensemble spec has no members");
  bool positive = false;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& e = members[m];
    if (e.checkpoint.empty() == e.predictions.empty()) {
      throw ConfigError("ensemble member " + std::to_string(m) +
                        " must name exactly one of checkpoint or predictions");
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw ConfigError("ensemble member " + std::to_string(m) + " has an invalid weight");
    }
    positive = positive || e.weight > 0.0;
  }
  if (!positive) throw ConfigError("ensemble spec needs at least one positive weight");
}

EnsembleSpec parse_ensemble_spec(const std::string& json_text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ensemble spec is not valid JSON: ") + e.what());
  }
  const nlohmann::json& list = j.is_object() && j.contains("members") ? j["members"] : j;
  if (!list.is_array()) throw ConfigError("ensemble spec must be a list of members");
  auto resolve = [&](const std::string& p) {
    if (base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).string();
  };
  EnsembleSpec spec;
  for (const auto& item : list) {
    if (!item.is_object()) throw ConfigError("ensemble member must be a JSON object");
    EnsembleMember m;
    try {
      if (item.contains("checkpoint")) m.checkpoint = resolve(item["checkpoint"].get<std::string>());
      if (item.contains("predictions")) {
        m.predictions = resolve(item["predictions"].get<std::string>());
      }
      if (item.contains("weight")) m.weight = item["weight"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad ensemble member: ") + e.what());
    }
    spec.members.push_back(std::move(m));
  }
  spec.validate();
  return spec;
}

EnsembleSpec load_ensemble_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ensemble spec " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ensemble_spec(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<double> weighted_mean(const std::vector<std::vector<double>>& predictions,
                                  std::span<const double> weights) {
  if (predictions.size() != weights.size() || predictions.empty()) {
    throw ConfigError("weighted_mean: one weight per member is required");
  }
  const std::size_t n = predictions.front().size();
  double total = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (!std::isfinite(weights[m]) || weights[m] < 0.0) {
      throw ConfigError("weighted_mean: weights must be finite and non-negative");
    }
    if (predictions[m].size() != n) throw ShapeError("weighted_mean: members disagree in length");
    total += weights[m];
  }
  if (!(total > 0.0)) throw ConfigError("weighted_mean: no positive weight");
  std::vector<double> out(n, 0.0);
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (weights[m] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += weights[m] * predictions[m][i];
  }
  for (double& v : out) v /= total;
  return out;
}

void write_predictions_csv(const std::string& path, std::span<const std::size_t> ids,
                           std::span<const double> values) {
  if (ids.size() != values.size()) throw ShapeError("write_predictions_csv: length mismatch");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "graph_id,prediction\n";
  char buf[40];
  for (std::size_t k = 0; k < ids.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", values[k]);
    out << ids[k] << ',' << buf << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path);
}

std::vector<double> read_predictions_csv(const std::string& path,
                                         std::span<const std::size_t> ids) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open predictions " + path);
  std::unordered_map<std::size_t, double> by_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("graph_id", 0) == 0)) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      by_id[std::stoull(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw LoadError(path + ": malformed line " + std::to_string(lineno));
    }
  }
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw LoadError(path + ": no prediction for graph " + std::to_string(id));
    out.push_back(it->second);
  }
  return out;
}

namespace {

double mae_of(std::span<const double> pred, const Dataset& dataset,
              std::span<const std::size_t> indices) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& t = dataset.graphs.at(indices[k]).target;
    if (!t) continue;
    sum += std::abs(pred[k] - *t);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace

EnsembleReport ensemble_from_predictions(const std::vector<std::vector<double>>& member_predictions,
                                         std::span<const double> weights, const Dataset& dataset,
                                         std::span<const std::size_t> indices) {
  EnsembleReport r;
  r.graph_ids.assign(indices.begin(), indices.end());
  r.prediction = weighted_mean(member_predictions, weights);
  double sum = 0.0;
  for (const auto& p : member_predictions) {
    r.member_mae.push_back(mae_of(p, dataset, indices));
    sum += r.member_mae.back();
  }
  r.average_mae = sum / static_cast<double>(member_predictions.size());
  r.ensembled_mae = mae_of(r.prediction, dataset, indices);
  return r;
}

EnsembleReport ensemble_eval(const EnsembleSpec& spec, const Dataset& dataset,
                             std::span<const std::size_t> indices, const PackSpec& pack) {
  spec.validate();
  std::vector<std::pair<EncodingOptions, std::vector<GraphFeatures>>> cache;
  std::vector<std::vector<double>> preds;
  std::vector<double> weights;
  for (const auto& member : spec.members) {
    weights.push_back(member.weight);
    if (!member.predictions.empty()) {
      preds.push_back(read_predictions_csv(member.predictions, indices));
      continue;
    }
    const HybridModel model = HybridModel::load(member.checkpoint);
    if (model.vocab().node != dataset.vocab.node || model.vocab().edge != dataset.vocab.edge) {
      throw LoadError(member.checkpoint + ": vocabulary does not match the dataset");
    }
    const EncodingOptions opts = model.config().encoding_options();
    const std::vector<GraphFeatures>* feats = nullptr;
    for (const auto& [o, f] : cache) {
      if (o == opts) feats = &f;
    }
    if (feats == nullptr) {
      cache.emplace_back(opts, featurize_dataset(dataset, opts));
      feats = &cache.back().second;
    }
    preds.push_back(predict(model, dataset, *feats, indices, pack));
  }
  return ensemble_from_predictions(preds, weights, dataset, indices);
}

std::string ensemble_summary_json(const EnsembleSpec& spec, const EnsembleReport& report) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  nlohmann::json j;
  j["graphs"] = report.graph_ids.size();
  j["average_mae"] = num(report.average_mae);
  j["ensembled_mae"] = num(report.ensembled_mae);
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t m = 0; m < spec.members.size() && m < report.member_mae.size(); ++m) {
    const auto& e = spec.members[m];
    members.push_back({{"source", e.checkpoint.empty() ? e.predictions : e.checkpoint},
                       {"weight", e.weight},
                       {"mae", num(report.member_mae[m])}});
  }
  j["members"] = members;
  return j.dump(2) + "\n";
}

}  // namespace graphmix

// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Weighted ensembles over live checkpoints or saved prediction files.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "graphmix/encodings.hpp"
#include "graphmix/graph.hpp"
#include "graphmix/packer.hpp"

namespace graphmix {

/// Exactly one of `checkpoint` / `predictions` is set.
struct EnsembleMember {
  std::string checkpoint;
  std::string predictions;
  double weight = 1.0;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  /// Throws ConfigError on negative or non-finite weights, no positive weight,
  /// or a member naming both or neither source.
  void validate() const;
};

/// JSON: either a list of members or {"members": [...]}, each member
/// {"checkpoint": path | "predictions": path, "weight": w}. Relative paths
/// are resolved against `base_dir` when it is non-empty.
EnsembleSpec parse_ensemble_spec(const std::string& json_text, const std::string& base_dir = "");
EnsembleSpec load_ensemble_spec(const std::string& path);

/// Σ w_m·y_m / Σ w_m per entry. Zero-weight members are skipped entirely, so
/// dropping them changes nothing.
std::vector<double> weighted_mean(const std::vector<std::vector<double>>& predictions,
                                  std::span<const double> weights);

/// Two-column CSV `graph_id,prediction` with a header row.
void write_predictions_csv(const std::string& path, std::span<const std::size_t> ids,
                           std::span<const double> values);
/// Values for `ids` in order; an id missing from the file raises LoadError.
std::vector<double> read_predictions_csv(const std::string& path,
                                         std::span<const std::size_t> ids);

struct EnsembleReport {
  std::vector<std::size_t> graph_ids;
  std::vector<double> prediction;
  std::vector<double> member_mae;  // NaN when no graph is labelled
  double average_mae = 0.0;        // unweighted mean of member_mae
  double ensembled_mae = 0.0;
};

/// Runs every member over `indices` (features are computed once per distinct
/// encoding setting) and aggregates.
EnsembleReport ensemble_eval(const EnsembleSpec& spec, const Dataset& dataset,
                             std::span<const std::size_t> indices, const PackSpec& pack = {});

/// Same aggregation from already computed member predictions.
EnsembleReport ensemble_from_predictions(const std::vector<std::vector<double>>& member_predictions,
                                         std::span<const double> weights, const Dataset& dataset,
                                         std::span<const std::size_t> indices);

std::string ensemble_summary_json(const EnsembleSpec& spec, const EnsembleReport& report);

}  // namespace graphmix

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granum/data.hpp"
#include "granum/models.hpp"
#include "granum/walkforward.hpp"

namespace granum::experiment {

enum class RetrainMode { None, Weekly };

struct ExperimentConfig {
  models::TrainConfig train;
  models::ModelOverrides overrides;
  bool scale = true;
  RetrainMode retrain = RetrainMode::None;
  /// Epochs per weekly refit when retrain == Weekly.
  std::size_t retrain_epochs = 1;
  /// When false, time columns are written as NA (reproducible output).
  bool record_time = true;
  unsigned jobs = 1;
};

struct RoundResult {
  models::ModelId model;
  std::size_t round; // 0-based; files and tables show round + 1
  std::uint64_t seed;
  walkforward::EvaluationResult eval;
  std::vector<double> epoch_losses;
};

/// One seeded round: fresh weights, train on the train split, walk forward
/// over the test split. wall_time_seconds covers train plus walk.
RoundResult run_round(models::ModelId model, const data::SeriesDataset &dataset,
                      std::size_t round, std::uint64_t seed,
                      const ExperimentConfig &cfg);

/// Rounds 0..n_rounds-1 with seed base_seed + i, ordered by round. Up to
/// cfg.jobs rounds run concurrently; results do not depend on the job count.
std::vector<RoundResult> run_rounds(models::ModelId model,
                                    const data::SeriesDataset &dataset,
                                    std::size_t n_rounds,
                                    std::uint64_t base_seed,
                                    const ExperimentConfig &cfg);

struct ColumnStats {
  double mean = 0, min = 0, max = 0;
  std::optional<double> sd; // sample SD (n - 1); absent for one value
};

/// DataError on empty input.
ColumnStats describe(std::span<const double> values);

struct SummaryStats {
  models::ModelId model;
  std::size_t rounds = 0;
  double test_mean_open = 0;
  ColumnStats rmse;
  std::array<ColumnStats, 5> per_day;
  std::optional<ColumnStats> time; // absent when timing was not recorded
  ColumnStats ratio;
};

/// Aggregates rounds of one model. DataError on empty input.
SummaryStats summarize(std::span<const RoundResult> rounds,
                       bool include_time = true);

struct ComparisonRow {
  models::ModelId model;
  std::optional<double> mean_time;
  double mean_ratio = 0;
  std::size_t time_rank = 0;
  std::size_t ratio_rank = 0;
};

/// Independent ascending ranks on mean time and mean RMSE/mean ratio.
/// Ties, and missing times, fall back to model enumeration order.
std::vector<ComparisonRow> rank_models(std::span<const SummaryStats> summaries);

} // namespace granum::experiment

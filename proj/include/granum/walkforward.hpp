// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "granum/data.hpp"
#include "granum/models.hpp"

namespace granum::walkforward {

using Forecast = std::array<double, models::kHorizon>;

struct ForecastRecord {
  data::Date week_start;
  Forecast predicted;
  Forecast actual;

  bool operator==(const ForecastRecord &) const = default;
};

struct EvaluationResult {
  double overall_rmse = 0;
  std::array<double, 5> per_day_rmse{};  // price units, Mon..Fri
  std::array<double, 5> per_day_ratio{}; // per_day_rmse / test_mean_open
  double ratio = 0;                      // overall_rmse / test_mean_open
  double test_mean_open = 0;
  double wall_time_seconds = 0;
  std::vector<ForecastRecord> records;
};

/// Maps a raw (unscaled) input window to five raw open forecasts.
using Forecaster = std::function<Forecast(const Tensor &window)>;

struct WalkOptions {
  std::size_t n_days = 5;
  data::FeatureSet features = data::FeatureSet::Univariate;
  /// Called after each test week's actual bars join the history.
  std::function<void(std::span<const data::DailyBar> history)> after_week;
};

/// Rolls week by week through the test split. Each forecast sees only the
/// last n_days realised bars before the week's Monday; the week's actual bars
/// are appended to the history afterwards. wall_time_seconds covers the walk.
EvaluationResult walk_forward_evaluate(const Forecaster &forecaster,
                                       const data::SeriesDataset &dataset,
                                       const WalkOptions &options);

/// Forecaster over a trained network; windows are scaled on the way in and
/// forecasts unscaled on the way out.
Forecaster network_forecaster(const nn::Network &net,
                              const data::Scaler &scaler, data::FeatureSet features);

EvaluationResult walk_forward_evaluate(const nn::Network &net,
                                       const data::SeriesDataset &dataset,
                                       const data::Scaler &scaler,
                                       const WalkOptions &options);

/// sqrt(mean((pred - actual)^2)); DataError on empty or unequal lengths.
double rmse(std::span<const double> pred, std::span<const double> actual);
/// Day d's RMSE over all records; DataError when empty.
std::array<double, 5> per_day_rmse(std::span<const ForecastRecord> records);
double overall_rmse(std::span<const ForecastRecord> records);
/// rmse / mean_open; DataError for a non-positive mean.
double ratio_to_mean(double rmse_value, double mean_open);

/// Fills the metric fields of `result` from its records.
void score(EvaluationResult &result, double test_mean_open);

/// `week_start,p1..p5,a1..a5`
void write_forecasts_csv(std::ostream &os,
                         std::span<const ForecastRecord> records);

} // namespace granum::walkforward

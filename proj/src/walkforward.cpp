// SPDX-License-Identifier: Apache-2.0
#include "granum/walkforward.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "granum/error.hpp"

namespace granum::walkforward {

double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.empty() || pred.size() != actual.size())
    throw DataError("rmse: need equal, non-zero lengths");
  double ss = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - actual[k];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

std::array<double, 5> per_day_rmse(std::span<const ForecastRecord> records) {
  if (records.empty())
    throw DataError("per_day_rmse: no forecast records");
  std::array<double, 5> out{};
  for (std::size_t d = 0; d < 5; ++d) {
    std::vector<double> p, a;
    for (const auto &r : records) {
      p.push_back(r.predicted[d]);
      a.push_back(r.actual[d]);
    }
    out[d] = rmse(p, a);
  }
  return out;
}

double overall_rmse(std::span<const ForecastRecord> records) {
  std::vector<double> p, a;
  for (const auto &r : records) {
    p.insert(p.end(), r.predicted.begin(), r.predicted.end());
    a.insert(a.end(), r.actual.begin(), r.actual.end());
  }
  return rmse(p, a);
}

double ratio_to_mean(double rmse_value, double mean_open) {
  if (!(mean_open > 0))
    throw DataError("ratio_to_mean: mean open must be positive");
  return rmse_value / mean_open;
}

void score(EvaluationResult &result, double test_mean_open) {
  result.test_mean_open = test_mean_open;
  result.overall_rmse = overall_rmse(result.records);
  result.per_day_rmse = per_day_rmse(result.records);
  result.ratio = ratio_to_mean(result.overall_rmse, test_mean_open);
  for (std::size_t d = 0; d < 5; ++d)
    result.per_day_ratio[d] = ratio_to_mean(result.per_day_rmse[d], test_mean_open);
}

EvaluationResult walk_forward_evaluate(const Forecaster &forecaster,
                                       const data::SeriesDataset &dataset,
                                       const WalkOptions &options) {
  if (dataset.test_count() == 0)
    throw DataError("walk-forward: test split is empty");
  std::vector<data::DailyBar> history = dataset.train_bars();
  if (history.size() < options.n_days)
    throw DataError("walk-forward: " + std::to_string(history.size()) +
                    " bars before the first test week; need " +
                    std::to_string(options.n_days));

  const auto start = std::chrono::steady_clock::now();
  EvaluationResult result;
  for (const auto &week : dataset.test_weeks()) {
    const auto window = std::span(history).last(options.n_days);
    const Tensor input = data::window_tensor(window, options.features);
    ForecastRecord rec{week.monday, forecaster(input), {}};
    for (std::size_t d = 0; d < 5; ++d)
      rec.actual[d] = week.bars[d].open;
    result.records.push_back(rec);
    history.insert(history.end(), week.bars.begin(), week.bars.end());
    if (options.after_week)
      options.after_week(history);
  }
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  score(result, dataset.test_mean_open());
  return result;
}

Forecaster network_forecaster(const nn::Network &net,
                              const data::Scaler &scaler,
                              data::FeatureSet features) {
  const std::size_t nf = data::feature_count(features);
  return [&net, scaler, nf](const Tensor &window) {
    Tensor scaled = window;
    for (std::size_t r = 0; r < window.dim(0); ++r)
      for (std::size_t f = 0; f < nf; ++f)
        scaled.at(r, f) = scaler.scale(f, window.at(r, f));
    Forecast out = models::predict(net, scaled);
    for (auto &v : out)
      v = scaler.unscale_open(v);
    return out;
  };
}

EvaluationResult walk_forward_evaluate(const nn::Network &net,
                                       const data::SeriesDataset &dataset,
                                       const data::Scaler &scaler,
                                       const WalkOptions &options) {
  return walk_forward_evaluate(
      network_forecaster(net, scaler, options.features), dataset, options);
}

void write_forecasts_csv(std::ostream &os,
                         std::span<const ForecastRecord> records) {
  os << "week_start,p1,p2,p3,p4,p5,a1,a2,a3,a4,a5\n";
  for (const auto &r : records) {
    os << data::format_date(r.week_start);
    for (double v : r.predicted)
      os << ',' << data::format_number(v);
    for (double v : r.actual)
      os << ',' << data::format_number(v);
    os << '\n';
  }
}

} // namespace granum::walkforward

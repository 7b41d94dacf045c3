// SPDX-License-Identifier: Apache-2.0
#include "granum/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>

#include "granum/error.hpp"

namespace granum::experiment {

RoundResult run_round(models::ModelId model, const data::SeriesDataset &dataset,
                      std::size_t round, std::uint64_t seed,
                      const ExperimentConfig &cfg) {
  const auto started = std::chrono::steady_clock::now();
  const auto spec = models::model_spec(model);
  if (dataset.train_count() == 0)
    throw DataError("training split is empty");

  const auto train_bars = dataset.train_bars();
  const data::Scaler scaler =
      cfg.scale ? data::Scaler::fit(train_bars) : data::Scaler{};
  const auto samples =
      data::make_training_samples(train_bars, spec.n_days, spec.features, scaler);

  RandomSource init(seed);
  nn::Network net = models::build(model, cfg.overrides, init);
  models::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = derive_seed(seed, 1);
  const auto log = models::train(net, samples, train_cfg);

  walkforward::WalkOptions walk{spec.n_days, spec.features, {}};
  std::size_t refits = 0;
  if (cfg.retrain == RetrainMode::Weekly) {
    walk.after_week = [&](std::span<const data::DailyBar> history) {
      models::TrainConfig refit = train_cfg;
      refit.epochs = cfg.retrain_epochs;
      refit.seed = derive_seed(seed, 2 + refits++);
      const auto more = data::make_training_samples(history, spec.n_days,
                                                    spec.features, scaler);
      models::train(net, more, refit);
    };
  }
  RoundResult r{model, round, seed,
                walkforward::walk_forward_evaluate(net, dataset, scaler, walk),
                log.epoch_losses};
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  r.eval.wall_time_seconds = std::round(elapsed * 100.0) / 100.0;
  return r;
}

std::vector<RoundResult> run_rounds(models::ModelId model,
                                    const data::SeriesDataset &dataset,
                                    std::size_t n_rounds,
                                    std::uint64_t base_seed,
                                    const ExperimentConfig &cfg) {
  if (n_rounds == 0)
    throw ConfigError("rounds must be at least 1");
  std::vector<std::optional<RoundResult>> slots(n_rounds);
  std::vector<std::exception_ptr> errors(n_rounds);
  auto work = [&](std::size_t i) {
    try {
      slots[i] = run_round(model, dataset, i, base_seed + i, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, n_rounds);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n_rounds; ++i)
      work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_rounds; i = next++)
          work(i);
      });
    for (auto &t : pool)
      t.join();
  }

  std::vector<RoundResult> out;
  for (std::size_t i = 0; i < n_rounds; ++i) {
    if (errors[i])
      std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

ColumnStats describe(std::span<const double> values) {
  if (values.empty())
    throw DataError("describe: no values");
  ColumnStats s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values)
      ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

SummaryStats summarize(std::span<const RoundResult> rounds, bool include_time) {
  if (rounds.empty())
    throw DataError("summarize: no rounds");
  // Sort by round so floating-point sums do not depend on input order.
  std::vector<const RoundResult *> sorted;
  for (const auto &r : rounds)
    sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](auto a, auto b) { return a->round < b->round; });

  auto column = [&](auto get) {
    std::vector<double> v;
    for (const auto *r : sorted)
      v.push_back(get(*r));
    return describe(v);
  };

  SummaryStats s;
  s.model = sorted.front()->model;
  s.rounds = rounds.size();
  s.test_mean_open = sorted.front()->eval.test_mean_open;
  s.rmse = column([](const RoundResult &r) { return r.eval.overall_rmse; });
  for (std::size_t d = 0; d < 5; ++d)
    s.per_day[d] =
        column([d](const RoundResult &r) { return r.eval.per_day_rmse[d]; });
  if (include_time)
    s.time = column(
        [](const RoundResult &r) { return r.eval.wall_time_seconds; });
  s.ratio = column([](const RoundResult &r) { return r.eval.ratio; });
  return s;
}

std::vector<ComparisonRow> rank_models(std::span<const SummaryStats> summaries) {
  std::vector<ComparisonRow> rows;
  for (const auto &s : summaries)
    rows.push_back({s.model, s.time ? std::optional(s.time->mean) : std::nullopt,
                    s.ratio.mean, 0, 0});

  auto enum_less = [](const ComparisonRow &a, const ComparisonRow &b) {
    return static_cast<int>(a.model) < static_cast<int>(b.model);
  };
  auto assign = [&](auto key, std::size_t ComparisonRow::*rank) {
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto ka = key(rows[a]), kb = key(rows[b]);
      if (ka != kb)
        return ka < kb;
      return enum_less(rows[a], rows[b]);
    });
    for (std::size_t k = 0; k < idx.size(); ++k)
      rows[idx[k]].*rank = k + 1;
  };
  // Missing times compare equal, so enumeration order decides.
  assign([](const ComparisonRow &r) { return r.mean_time.value_or(0.0); },
         &ComparisonRow::time_rank);
  assign([](const ComparisonRow &r) { return r.mean_ratio; },
         &ComparisonRow::ratio_rank);
  return rows;
}

} // namespace granum::experiment

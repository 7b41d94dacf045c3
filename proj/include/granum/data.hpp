// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "granum/tensor.hpp"

namespace granum::data {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD); throws DataError.
Date parse_date(std::string_view text);
std::string format_date(Date d);
/// Monday on or before d.
Date week_monday(Date d);
bool is_weekday(Date d);

/// One 5-minute OHLCV record. slot is minutes after midnight.
struct TickRecord {
  Date date;
  int slot = 0;
  double open = 0, high = 0, low = 0, close = 0;
  std::int64_t volume = 0;
};

/// Daily aggregate: first open, max high, min low, last close, summed volume.
struct DailyBar {
  Date date;
  double open = 0, high = 0, low = 0, close = 0;
  std::int64_t volume = 0;

  bool operator==(const DailyBar &) const = default;
};

/// Monday..Friday block of five daily bars.
struct TradingWeek {
  Date monday;
  std::array<DailyBar, 5> bars;

  Date friday() const { return monday + std::chrono::days(4); }
};

enum class ExclusionReason { MissingDays, Partial };

struct Exclusion {
  Date monday;
  ExclusionReason reason;
  std::size_t bars_present;
};

/// Lines of the form `EXCLUDED <monday-date> reason=<missing-days|partial>`.
std::string format_exclusions(std::span<const Exclusion> exclusions);

struct WeekBuild {
  std::vector<TradingWeek> weeks;
  std::vector<Exclusion> excluded;
};

enum class FeatureSet { Univariate, Multivariate };
std::size_t feature_count(FeatureSet f);

/// Complete weeks split at a boundary date: train weeks end on or before it,
/// test weeks start after it.
class SeriesDataset {
public:
  SeriesDataset(std::vector<TradingWeek> weeks, std::size_t train_count,
                Date boundary);

  std::span<const TradingWeek> weeks() const { return weeks_; }
  std::span<const TradingWeek> train_weeks() const;
  std::span<const TradingWeek> test_weeks() const;
  std::size_t train_count() const { return train_count_; }
  std::size_t test_count() const { return weeks_.size() - train_count_; }
  Date boundary() const { return boundary_; }

  /// All daily bars of the training weeks, in date order.
  std::vector<DailyBar> train_bars() const;
  /// Mean daily open over the test weeks; throws DataError when empty.
  double test_mean_open() const;

private:
  std::vector<TradingWeek> weeks_;
  std::size_t train_count_;
  Date boundary_;
};

/// z-score scaling of the five OHLCV features, fit on training bars only.
/// A default-constructed scaler is the identity.
class Scaler {
public:
  Scaler() = default;
  static Scaler fit(std::span<const DailyBar> bars);

  bool enabled() const { return enabled_; }
  const std::array<double, 5> &means() const { return mean_; }
  const std::array<double, 5> &scales() const { return scale_; }

  double scale(std::size_t feature, double v) const;
  double unscale_open(double v) const;

  /// Compact text form `zscore m0 s0 m1 s1 ...` or `identity`.
  std::string to_string() const;
  static Scaler from_string(std::string_view text);

private:
  bool enabled_ = false;
  std::array<double, 5> mean_{};
  std::array<double, 5> scale_{1, 1, 1, 1, 1};
};

/// Input window over consecutive bars, shape (bars.size() x features).
Tensor window_tensor(std::span<const DailyBar> bars, FeatureSet features,
                     const Scaler &scaler = {});

struct WindowSample {
  Tensor input;  // (n_days x n_features)
  Tensor target; // 5 opens following the window
  Date last_input;
  Date first_target;
};

// ---- pipeline ----------------------------------------------------------------

/// Reads the tick CSV (`date,time,open,high,low,close,volume`), validates every
/// row and returns records sorted by (date, slot).
std::vector<TickRecord> parse_ticks(std::istream &is);
std::vector<DailyBar> aggregate_daily(std::span<const TickRecord> ticks);
/// Groups bars into Monday-anchored weeks. Weeks lacking any weekday are
/// dropped and reported; weekend-dated bars are ignored.
WeekBuild build_weeks(std::span<const DailyBar> bars);
/// Throws ConfigError when the boundary falls inside a week (Monday through
/// Thursday of a retained week).
SeriesDataset split(std::vector<TradingWeek> weeks, Date boundary);
/// Stride-1 windows over the training bars: input days [t, t+n_days), target
/// opens of days [t+n_days, t+n_days+5). Throws DataError when the training
/// span is too short.
std::vector<WindowSample> make_training_samples(std::span<const DailyBar> bars,
                                                std::size_t n_days,
                                                FeatureSet features,
                                                const Scaler &scaler = {});
std::vector<WindowSample> make_training_samples(const SeriesDataset &dataset,
                                                std::size_t n_days,
                                                FeatureSet features,
                                                const Scaler &scaler = {});

// ---- daily CSV ---------------------------------------------------------------

void write_daily_csv(std::ostream &os, std::span<const DailyBar> bars);
std::vector<DailyBar> read_daily_csv(std::istream &is);

/// Shortest decimal text that parses back to exactly v.
std::string format_number(double v);

// ---- synthetic series ----------------------------------------------------------

struct SynthParams {
  Date start = parse_date("2012-12-31");
  double base = 600.0;
  double drift_per_day = 0.05;
  double amplitude = 20.0;
  double period_days = 5.0;
  double noise_sd = 2.0;
  double base_volume = 100000.0;
};

/// Deterministic weekday series: trend + sinusoid + seeded Gaussian noise.
/// `start` is moved back to its Monday; every week is complete.
std::vector<DailyBar> synthesize(std::size_t weeks, std::uint64_t seed,
                                 const SynthParams &params = {});

} // namespace granum::data

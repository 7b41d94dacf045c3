// SPDX-License-Identifier: Apache-2.0
#include "granum/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "granum/error.hpp"
#include "granum/random.hpp"

namespace granum::data {

using namespace std::chrono;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

template <typename T> bool parse_number(std::string_view s, T &out) {
  if (s.empty())
    return false;
  if (s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

int parse_slot(std::string_view s) {
  // HH:MM, 24h
  if (s.size() != 5 || s[2] != ':')
    return -1;
  int h = 0, m = 0;
  if (!parse_number(s.substr(0, 2), h) || !parse_number(s.substr(3, 2), m))
    return -1;
  if (h < 0 || h > 23 || m < 0 || m > 59)
    return -1;
  return h * 60 + m;
}

bool ohlc_ordered(double open, double high, double low, double close) {
  return low <= std::min(open, close) && std::max(open, close) <= high;
}

/// Iterates non-empty lines, remembering 1-based line numbers.
class LineReader {
public:
  explicit LineReader(std::istream &is) : is_(is) {}
  bool next(std::string &line) {
    while (std::getline(is_, line)) {
      ++number_;
      if (!trim(line).empty())
        return true;
    }
    return false;
  }
  std::size_t number() const { return number_; }

private:
  std::istream &is_;
  std::size_t number_ = 0;
};

void expect_header(LineReader &reader, std::string &line,
                   const std::vector<std::string_view> &columns) {
  if (!reader.next(line))
    throw DataError("empty file: no header row");
  auto fields = split_fields(line);
  if (fields != columns) {
    std::string expected;
    for (auto c : columns)
      expected += (expected.empty() ? "" : ",") + std::string(c);
    throw ParseError(reader.number(), "expected header '" + expected + "'");
  }
}

} // namespace

// ---- dates -------------------------------------------------------------------

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), m) ||
      !parse_number(text.substr(8, 2), d))
    throw DataError("invalid date '" + std::string(text) + "' (want YYYY-MM-DD)");
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok())
    throw DataError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

Date week_monday(Date d) {
  const weekday wd{d};
  // iso_encoding: Monday = 1 .. Sunday = 7
  return d - days(wd.iso_encoding() - 1);
}

bool is_weekday(Date d) { return weekday{d}.iso_encoding() <= 5; }

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc())
    throw PersistenceError("cannot format number");
  return std::string(buf, ptr);
}

std::size_t feature_count(FeatureSet f) {
  return f == FeatureSet::Univariate ? 1 : 5;
}

std::string format_exclusions(std::span<const Exclusion> exclusions) {
  std::string out;
  for (const auto &e : exclusions)
    out += "EXCLUDED " + format_date(e.monday) + " reason=" +
           (e.reason == ExclusionReason::Partial ? "partial" : "missing-days") +
           "\n";
  return out;
}

// ---- dataset -----------------------------------------------------------------

SeriesDataset::SeriesDataset(std::vector<TradingWeek> weeks,
                             std::size_t train_count, Date boundary)
    : weeks_(std::move(weeks)), train_count_(train_count), boundary_(boundary) {
  if (train_count_ > weeks_.size())
    throw DataError("train count exceeds week count");
}

std::span<const TradingWeek> SeriesDataset::train_weeks() const {
  return std::span(weeks_).first(train_count_);
}

std::span<const TradingWeek> SeriesDataset::test_weeks() const {
  return std::span(weeks_).subspan(train_count_);
}

std::vector<DailyBar> SeriesDataset::train_bars() const {
  std::vector<DailyBar> out;
  for (const auto &w : train_weeks())
    out.insert(out.end(), w.bars.begin(), w.bars.end());
  return out;
}

double SeriesDataset::test_mean_open() const {
  if (test_count() == 0)
    throw DataError("test split is empty");
  double s = 0;
  for (const auto &w : test_weeks())
    for (const auto &b : w.bars)
      s += b.open;
  return s / static_cast<double>(5 * test_count());
}

// ---- scaling -----------------------------------------------------------------

namespace {

std::array<double, 5> features_of(const DailyBar &b) {
  return {b.open, b.high, b.low, b.close, static_cast<double>(b.volume)};
}

} // namespace

Scaler Scaler::fit(std::span<const DailyBar> bars) {
  if (bars.empty())
    throw DataError("cannot fit a scaler on zero bars");
  Scaler s;
  s.enabled_ = true;
  const double n = static_cast<double>(bars.size());
  for (std::size_t f = 0; f < 5; ++f) {
    double sum = 0;
    for (const auto &b : bars)
      sum += features_of(b)[f];
    const double mean = sum / n;
    double ss = 0;
    for (const auto &b : bars) {
      const double d = features_of(b)[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    s.mean_[f] = mean;
    s.scale_[f] = sd > 0 ? sd : 1.0;
  }
  return s;
}

double Scaler::scale(std::size_t feature, double v) const {
  return enabled_ ? (v - mean_[feature]) / scale_[feature] : v;
}

double Scaler::unscale_open(double v) const {
  return enabled_ ? v * scale_[0] + mean_[0] : v;
}

std::string Scaler::to_string() const {
  if (!enabled_)
    return "identity";
  std::string out = "zscore";
  for (std::size_t f = 0; f < 5; ++f)
    out += " " + format_number(mean_[f]) + " " + format_number(scale_[f]);
  return out;
}

Scaler Scaler::from_string(std::string_view text) {
  text = trim(text);
  if (text == "identity")
    return {};
  std::istringstream is{std::string(text)};
  std::string kind;
  is >> kind;
  if (kind != "zscore")
    throw PersistenceError("unknown scaler '" + kind + "'");
  Scaler s;
  s.enabled_ = true;
  for (std::size_t f = 0; f < 5; ++f) {
    std::string m, sd;
    if (!(is >> m >> sd) || !parse_number(m, s.mean_[f]) ||
        !parse_number(sd, s.scale_[f]) || !(s.scale_[f] > 0))
      throw PersistenceError("malformed scaler parameters");
  }
  return s;
}

Tensor window_tensor(std::span<const DailyBar> bars, FeatureSet features,
                     const Scaler &scaler) {
  const std::size_t nf = feature_count(features);
  Tensor t({bars.size(), nf});
  for (std::size_t d = 0; d < bars.size(); ++d) {
    const auto values = features_of(bars[d]);
    for (std::size_t f = 0; f < nf; ++f)
      t.at(d, f) = scaler.scale(f, values[f]);
  }
  return t;
}

// ---- pipeline ----------------------------------------------------------------

std::vector<TickRecord> parse_ticks(std::istream &is) {
  LineReader reader(is);
  std::string line;
  expect_header(reader, line,
                {"date", "time", "open", "high", "low", "close", "volume"});
  std::vector<TickRecord> ticks;
  std::vector<std::size_t> line_of;
  while (reader.next(line)) {
    const auto n = reader.number();
    auto f = split_fields(line);
    if (f.size() != 7)
      throw ParseError(n, "expected 7 fields, got " + std::to_string(f.size()));
    TickRecord t;
    try {
      t.date = parse_date(f[0]);
    } catch (const DataError &e) {
      throw ParseError(n, e.what());
    }
    t.slot = parse_slot(f[1]);
    if (t.slot < 0)
      throw ParseError(n, "invalid time '" + std::string(f[1]) + "' (want HH:MM)");
    if (!parse_number(f[2], t.open) || !parse_number(f[3], t.high) ||
        !parse_number(f[4], t.low) || !parse_number(f[5], t.close) ||
        !std::isfinite(t.open) || !std::isfinite(t.high) ||
        !std::isfinite(t.low) || !std::isfinite(t.close))
      throw ParseError(n, "invalid price field");
    if (!parse_number(f[6], t.volume))
      throw ParseError(n, "invalid volume '" + std::string(f[6]) + "'");
    if (t.volume < 0)
      throw ValidationError("line " + std::to_string(n) + ": negative volume");
    if (!ohlc_ordered(t.open, t.high, t.low, t.close))
      throw ValidationError("line " + std::to_string(n) +
                            ": OHLC ordering violated (need low <= open,close "
                            "<= high)");
    ticks.push_back(t);
    line_of.push_back(n);
  }
  if (ticks.empty())
    throw DataError("no tick rows");

  std::vector<std::size_t> order(ticks.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::pair(ticks[a].date, ticks[a].slot) <
           std::pair(ticks[b].date, ticks[b].slot);
  });
  std::vector<TickRecord> sorted;
  sorted.reserve(ticks.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto &t = ticks[order[k]];
    if (k > 0) {
      const auto &prev = ticks[order[k - 1]];
      if (prev.date == t.date && prev.slot == t.slot)
        throw ValidationError("line " + std::to_string(line_of[order[k]]) +
                              ": duplicate record for " + format_date(t.date) +
                              " slot (also line " +
                              std::to_string(line_of[order[k - 1]]) + ")");
    }
    sorted.push_back(t);
  }
  return sorted;
}

std::vector<DailyBar> aggregate_daily(std::span<const TickRecord> ticks) {
  std::vector<DailyBar> bars;
  for (const auto &t : ticks) {
    if (bars.empty() || bars.back().date != t.date) {
      if (!bars.empty() && t.date < bars.back().date)
        throw DataError("aggregate_daily: ticks are not date-sorted");
      bars.push_back({t.date, t.open, t.high, t.low, t.close, t.volume});
      continue;
    }
    auto &b = bars.back();
    b.high = std::max(b.high, t.high);
    b.low = std::min(b.low, t.low);
    b.close = t.close;
    b.volume += t.volume;
  }
  return bars;
}

WeekBuild build_weeks(std::span<const DailyBar> bars) {
  std::map<Date, std::vector<const DailyBar *>> groups;
  for (const auto &b : bars)
    if (is_weekday(b.date))
      groups[week_monday(b.date)].push_back(&b);

  WeekBuild out;
  std::size_t index = 0;
  for (const auto &[monday, members] : groups) {
    const bool edge = index == 0 || index + 1 == groups.size();
    ++index;
    std::array<const DailyBar *, 5> slots{};
    for (const auto *b : members) {
      const auto day = (b->date - monday).count();
      if (slots[day] != nullptr)
        throw ValidationError("duplicate daily bar for " + format_date(b->date));
      slots[day] = b;
    }
    const auto present = static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](auto p) { return p; }));
    if (present < 5) {
      out.excluded.push_back(
          {monday, edge ? ExclusionReason::Partial : ExclusionReason::MissingDays,
           present});
      continue;
    }
    TradingWeek w{monday, {}};
    for (std::size_t d = 0; d < 5; ++d)
      w.bars[d] = *slots[d];
    out.weeks.push_back(w);
  }
  return out;
}

SeriesDataset split(std::vector<TradingWeek> weeks, Date boundary) {
  std::size_t train = 0;
  for (std::size_t k = 0; k < weeks.size(); ++k) {
    const auto &w = weeks[k];
    if (k > 0 && w.monday <= weeks[k - 1].monday)
      throw DataError("weeks are not strictly increasing");
    if (w.friday() <= boundary)
      train = k + 1;
    else if (w.monday <= boundary)
      throw ConfigError("boundary " + format_date(boundary) +
                        " splits the week starting " + format_date(w.monday));
  }
  return SeriesDataset(std::move(weeks), train, boundary);
}

std::vector<WindowSample> make_training_samples(std::span<const DailyBar> bars,
                                                std::size_t n_days,
                                                FeatureSet features,
                                                const Scaler &scaler) {
  if (n_days == 0)
    throw ConfigError("window length must be positive");
  constexpr std::size_t horizon = 5;
  if (bars.size() < n_days + horizon)
    throw DataError("training span has " + std::to_string(bars.size()) +
                    " daily bars; need at least " +
                    std::to_string(n_days + horizon));
  std::vector<WindowSample> out;
  for (std::size_t t = 0; t + n_days + horizon <= bars.size(); ++t) {
    WindowSample s;
    s.input = window_tensor(bars.subspan(t, n_days), features, scaler);
    s.target = Tensor({horizon});
    for (std::size_t k = 0; k < horizon; ++k)
      s.target[k] = scaler.scale(0, bars[t + n_days + k].open);
    s.last_input = bars[t + n_days - 1].date;
    s.first_target = bars[t + n_days].date;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<WindowSample> make_training_samples(const SeriesDataset &dataset,
                                                std::size_t n_days,
                                                FeatureSet features,
                                                const Scaler &scaler) {
  const auto bars = dataset.train_bars();
  return make_training_samples(bars, n_days, features, scaler);
}

// ---- daily CSV ---------------------------------------------------------------

void write_daily_csv(std::ostream &os, std::span<const DailyBar> bars) {
  os << "date,open,high,low,close,volume\n";
  for (const auto &b : bars)
    os << format_date(b.date) << ',' << format_number(b.open) << ','
       << format_number(b.high) << ',' << format_number(b.low) << ','
       << format_number(b.close) << ',' << b.volume << '\n';
}

std::vector<DailyBar> read_daily_csv(std::istream &is) {
  LineReader reader(is);
  std::string line;
  expect_header(reader, line, {"date", "open", "high", "low", "close", "volume"});
  std::vector<DailyBar> bars;
  while (reader.next(line)) {
    const auto n = reader.number();
    auto f = split_fields(line);
    if (f.size() != 6)
      throw ParseError(n, "expected 6 fields, got " + std::to_string(f.size()));
    DailyBar b;
    try {
      b.date = parse_date(f[0]);
    } catch (const DataError &e) {
      throw ParseError(n, e.what());
    }
    if (!parse_number(f[1], b.open) || !parse_number(f[2], b.high) ||
        !parse_number(f[3], b.low) || !parse_number(f[4], b.close) ||
        !parse_number(f[5], b.volume))
      throw ParseError(n, "invalid numeric field");
    if (b.volume < 0 || !ohlc_ordered(b.open, b.high, b.low, b.close))
      throw ValidationError("line " + std::to_string(n) +
                            ": OHLC ordering or volume violated");
    if (!bars.empty() && b.date <= bars.back().date)
      throw ValidationError("line " + std::to_string(n) +
                            ": dates must be strictly increasing");
    bars.push_back(b);
  }
  if (bars.empty())
    throw DataError("no daily rows");
  return bars;
}

// ---- synthetic series ----------------------------------------------------------

std::vector<DailyBar> synthesize(std::size_t weeks, std::uint64_t seed,
                                 const SynthParams &p) {
  if (weeks == 0)
    throw ConfigError("synthesize: need at least one week");
  if (!(p.period_days > 0) || p.noise_sd < 0)
    throw ConfigError("synthesize: period must be positive, noise non-negative");
  RandomSource rs(seed);
  std::vector<DailyBar> bars;
  bars.reserve(weeks * 5);
  const Date monday = week_monday(p.start);
  std::size_t t = 0;
  for (std::size_t w = 0; w < weeks; ++w)
    for (int d = 0; d < 5; ++d, ++t) {
      const double td = static_cast<double>(t);
      const double level =
          p.base + p.drift_per_day * td +
          p.amplitude * std::sin(2.0 * std::numbers::pi * td / p.period_days);
      DailyBar b;
      b.date = monday + days(7 * static_cast<int>(w) + d);
      b.open = level + p.noise_sd * rs.normal();
      b.close = b.open + p.noise_sd * rs.normal();
      b.high = std::max(b.open, b.close) + 0.5 * p.noise_sd * std::abs(rs.normal());
      b.low = std::min(b.open, b.close) - 0.5 * p.noise_sd * std::abs(rs.normal());
      b.volume = static_cast<std::int64_t>(
          std::llround(p.base_volume * (1.0 + 0.1 * rs.normal())));
      b.volume = std::max<std::int64_t>(b.volume, 0);
      // Two decimals, like exchange prices; keeps CSV text short.
      for (double *v : {&b.open, &b.close, &b.high, &b.low})
        *v = std::round(*v * 100.0) / 100.0;
      b.high = std::max({b.high, b.open, b.close});
      b.low = std::min({b.low, b.open, b.close});
      bars.push_back(b);
    }
  return bars;
}

} // namespace granum::data

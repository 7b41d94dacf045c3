// SPDX-License-Identifier: Apache-2.0
#include "granum/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "granum/error.hpp"

namespace granum::report {

namespace fs = std::filesystem;
using experiment::ComparisonRow;
using models::ModelId;

namespace {

constexpr const char *kRoundsHeader = "round,rmse,mon,tue,wed,thu,fri,time_s";
constexpr const char *kComparisonHeader =
    "rank,time_model,mean_time_s,ratio_model,mean_ratio";
constexpr const char *kDayNames[5] = {"Mon", "Tue", "Wed", "Thu", "Fri"};

std::string cell(const std::optional<double> &v) {
  return v ? data::format_number(*v) : "NA";
}

std::optional<double> parse_cell(const std::string &s, std::size_t line) {
  if (s == "NA")
    return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(line, "bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ','))
    out.push_back(f);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::string fixed(const std::optional<double> &v, int decimals) {
  if (!v)
    return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

std::string pad(const std::string &s, std::size_t width, bool left = false) {
  if (s.size() >= width)
    return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw PersistenceError("cannot open " + path.string() + " for writing");
  os << content;
  if (!os)
    throw PersistenceError("write to " + path.string() + " failed");
}

template <typename F> std::string to_text(F &&writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

} // namespace

ModelTable make_table(std::span<const experiment::RoundResult> rounds,
                      const experiment::SummaryStats &s) {
  ModelTable t{s.model, {}};
  const bool timed = s.time.has_value();
  for (const auto &r : rounds) {
    TableRow row{std::to_string(r.round + 1), r.eval.overall_rmse, {}, {}};
    for (std::size_t d = 0; d < 5; ++d)
      row.day[d] = r.eval.per_day_rmse[d];
    if (timed)
      row.time = r.eval.wall_time_seconds;
    t.rows.push_back(row);
  }
  auto aggregate = [&](const char *label, auto pick) {
    TableRow row{label, pick(s.rmse), {}, {}};
    for (std::size_t d = 0; d < 5; ++d)
      row.day[d] = pick(s.per_day[d]);
    if (timed)
      row.time = pick(*s.time);
    t.rows.push_back(row);
  };
  using CS = experiment::ColumnStats;
  aggregate("Mean", [](const CS &c) { return std::optional(c.mean); });
  aggregate("Min", [](const CS &c) { return std::optional(c.min); });
  aggregate("Max", [](const CS &c) { return std::optional(c.max); });
  aggregate("SD", [](const CS &c) { return c.sd; });

  TableRow ratio{"RMSE/Mean", walkforward::ratio_to_mean(s.rmse.mean, s.test_mean_open),
                 {}, {}};
  for (std::size_t d = 0; d < 5; ++d)
    ratio.day[d] = walkforward::ratio_to_mean(s.per_day[d].mean, s.test_mean_open);
  t.rows.push_back(ratio);
  return t;
}

void write_rounds_csv(std::ostream &os, const ModelTable &table) {
  os << kRoundsHeader << '\n';
  for (const auto &r : table.rows) {
    os << r.label << ',' << cell(r.rmse);
    for (const auto &d : r.day)
      os << ',' << cell(d);
    os << ',' << cell(r.time) << '\n';
  }
}

ModelTable read_rounds_csv(std::istream &is, ModelId model) {
  std::string line;
  std::size_t n = 1;
  if (!std::getline(is, line) || line != kRoundsHeader)
    throw ParseError(n, std::string("expected header '") + kRoundsHeader + "'");
  ModelTable t{model, {}};
  while (std::getline(is, line)) {
    ++n;
    if (line.empty())
      continue;
    auto f = split(line);
    if (f.size() != 8)
      throw ParseError(n, "expected 8 fields");
    TableRow row{f[0], parse_cell(f[1], n), {}, parse_cell(f[7], n)};
    for (std::size_t d = 0; d < 5; ++d)
      row.day[d] = parse_cell(f[2 + d], n);
    t.rows.push_back(row);
  }
  return t;
}

void write_comparison_csv(std::ostream &os,
                          std::span<const ComparisonRow> rows) {
  os << kComparisonHeader << '\n';
  for (std::size_t rank = 1; rank <= rows.size(); ++rank) {
    auto by_time = std::find_if(rows.begin(), rows.end(),
                                [&](const auto &r) { return r.time_rank == rank; });
    auto by_ratio = std::find_if(rows.begin(), rows.end(), [&](const auto &r) {
      return r.ratio_rank == rank;
    });
    if (by_time == rows.end() || by_ratio == rows.end())
      throw DataError("comparison ranks are not a permutation");
    os << rank << ',' << models::model_key(by_time->model) << ','
       << cell(by_time->mean_time) << ',' << models::model_key(by_ratio->model)
       << ',' << data::format_number(by_ratio->mean_ratio) << '\n';
  }
}

std::vector<ComparisonRow> read_comparison_csv(std::istream &is) {
  std::string line;
  std::size_t n = 1;
  if (!std::getline(is, line) || line != kComparisonHeader)
    throw ParseError(n, std::string("expected header '") + kComparisonHeader + "'");
  std::vector<ComparisonRow> rows;
  auto row_for = [&](ModelId id) -> ComparisonRow & {
    for (auto &r : rows)
      if (r.model == id)
        return r;
    rows.push_back({id, std::nullopt, 0, 0, 0});
    return rows.back();
  };
  while (std::getline(is, line)) {
    ++n;
    if (line.empty())
      continue;
    auto f = split(line);
    if (f.size() != 5)
      throw ParseError(n, "expected 5 fields");
    const std::size_t rank = std::stoul(f[0]);
    auto &t = row_for(models::parse_model_id(f[1]));
    t.time_rank = rank;
    t.mean_time = parse_cell(f[2], n);
    auto &r = row_for(models::parse_model_id(f[3]));
    r.ratio_rank = rank;
    auto ratio = parse_cell(f[4], n);
    if (!ratio)
      throw ParseError(n, "missing ratio");
    r.mean_ratio = *ratio;
  }
  std::sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
    return static_cast<int>(a.model) < static_cast<int>(b.model);
  });
  return rows;
}

void write_perday_csv(std::ostream &os, const walkforward::EvaluationResult &e) {
  os << "day,rmse,ratio\n";
  for (std::size_t d = 0; d < 5; ++d)
    os << kDayNames[d] << ',' << data::format_number(e.per_day_rmse[d]) << ','
       << data::format_number(e.per_day_ratio[d]) << '\n';
}

std::string render_text(std::span<const ModelTable> tables,
                        std::span<const ComparisonRow> comparison) {
  std::ostringstream os;
  for (const auto &t : tables) {
    os << models::model_label(t.model)
       << " regression results (RMSE in price units, time in seconds)\n";
    os << pad("No.", 10, true) << pad("RMSE", 10);
    for (auto d : kDayNames)
      os << pad(d, 9);
    os << pad("Time", 10) << '\n';
    for (const auto &r : t.rows) {
      const bool ratio_row = r.label == "RMSE/Mean";
      const int decimals = ratio_row ? 5 : 4;
      os << pad(r.label, 10, true) << pad(fixed(r.rmse, decimals), 10);
      for (const auto &d : r.day)
        os << pad(fixed(d, ratio_row ? 5 : 3), 9);
      os << pad(ratio_row ? "" : fixed(r.time, 2), 10) << '\n';
    }
    os << '\n';
  }
  if (!comparison.empty()) {
    os << "Comparison of models by execution time and RMSE/Mean\n";
    os << pad("Rank", 6, true) << pad("Model", 9, true) << pad("Time(s)", 10)
       << "   " << pad("Rank", 6, true) << pad("Model", 9, true)
       << pad("RMSE/Mean", 11) << '\n';
    for (std::size_t rank = 1; rank <= comparison.size(); ++rank) {
      const ComparisonRow *t = nullptr, *r = nullptr;
      for (const auto &row : comparison) {
        if (row.time_rank == rank)
          t = &row;
        if (row.ratio_rank == rank)
          r = &row;
      }
      if (!t || !r)
        throw DataError("comparison ranks are not a permutation");
      os << pad(std::to_string(rank), 6, true)
         << pad(std::string(models::model_label(t->model)), 9, true)
         << pad(fixed(t->mean_time, 2), 10) << "   "
         << pad(std::to_string(rank), 6, true)
         << pad(std::string(models::model_label(r->model)), 9, true)
         << pad(fixed(r->mean_ratio, 5), 11) << '\n';
    }
  }
  return os.str();
}

void emit_report(std::span<const ModelResults> results,
                 std::span<const ComparisonRow> comparison,
                 const fs::path &destination) {
  std::error_code ec;
  fs::create_directories(destination, ec);
  if (ec)
    throw PersistenceError("cannot create " + destination.string() + ": " +
                           ec.message());
  std::vector<ModelTable> tables;
  for (const auto &m : results) {
    const fs::path dir = destination / std::string(models::model_key(m.summary.model));
    fs::create_directories(dir, ec);
    if (ec)
      throw PersistenceError("cannot create " + dir.string() + ": " + ec.message());
    tables.push_back(make_table(m.rounds, m.summary));
    write_file(dir / "rounds.csv",
               to_text([&](std::ostream &os) { write_rounds_csv(os, tables.back()); }));
    for (const auto &r : m.rounds) {
      const std::string stem = "round_" + std::to_string(r.round + 1);
      write_file(dir / (stem + "_perday.csv"),
                 to_text([&](std::ostream &os) { write_perday_csv(os, r.eval); }));
      write_file(dir / (stem + "_forecasts.csv"), to_text([&](std::ostream &os) {
                   walkforward::write_forecasts_csv(os, r.eval.records);
                 }));
    }
  }
  write_file(destination / "comparison.csv", to_text([&](std::ostream &os) {
               write_comparison_csv(os, comparison);
             }));
  write_file(destination / "report.txt", render_text(tables, comparison));
}

std::string render_from_directory(const fs::path &results) {
  std::ifstream cmp(results / "comparison.csv", std::ios::binary);
  if (!cmp)
    throw PersistenceError("cannot open " + (results / "comparison.csv").string());
  const auto comparison = read_comparison_csv(cmp);
  std::vector<ModelTable> tables;
  for (const auto &row : comparison) {
    const fs::path path =
        results / std::string(models::model_key(row.model)) / "rounds.csv";
    std::ifstream is(path, std::ios::binary);
    if (!is)
      throw PersistenceError("cannot open " + path.string());
    tables.push_back(read_rounds_csv(is, row.model));
  }
  return render_text(tables, comparison);
}

} // namespace granum::report

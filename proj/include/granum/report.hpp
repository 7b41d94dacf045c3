// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granum/experiment.hpp"

namespace granum::report {

/// One line of a per-model results table: a round, or an aggregate row.
struct TableRow {
  std::string label; // "1".."n", "Mean", "Min", "Max", "SD", "RMSE/Mean"
  std::optional<double> rmse;
  std::array<std::optional<double>, 5> day;
  std::optional<double> time;

  bool operator==(const TableRow &) const = default;
};

/// Rounds followed by Mean, Min, Max, SD and RMSE/Mean rows, in the column
/// order round,rmse,mon,tue,wed,thu,fri,time_s.
struct ModelTable {
  models::ModelId model;
  std::vector<TableRow> rows;

  bool operator==(const ModelTable &) const = default;
};

ModelTable make_table(std::span<const experiment::RoundResult> rounds,
                      const experiment::SummaryStats &summary);

void write_rounds_csv(std::ostream &os, const ModelTable &table);
ModelTable read_rounds_csv(std::istream &is, models::ModelId model);

/// Columns: rank,time_model,mean_time_s,ratio_model,mean_ratio.
void write_comparison_csv(std::ostream &os,
                          std::span<const experiment::ComparisonRow> rows);
std::vector<experiment::ComparisonRow> read_comparison_csv(std::istream &is);

/// `day,rmse,ratio` for Mon..Fri of one round.
void write_perday_csv(std::ostream &os, const walkforward::EvaluationResult &e);

/// Plain-text rendering of every model table and the comparison.
std::string render_text(std::span<const ModelTable> tables,
                        std::span<const experiment::ComparisonRow> comparison);

struct ModelResults {
  std::vector<experiment::RoundResult> rounds;
  experiment::SummaryStats summary;
};

/// Writes results/<model>/rounds.csv, round_<i>_perday.csv,
/// round_<i>_forecasts.csv, results/comparison.csv and results/report.txt.
/// Output is a pure function of the inputs.
void emit_report(std::span<const ModelResults> results,
                 std::span<const experiment::ComparisonRow> comparison,
                 const std::filesystem::path &destination);

/// Re-renders report text from the CSVs under a results directory.
std::string render_from_directory(const std::filesystem::path &results);

} // namespace granum::report

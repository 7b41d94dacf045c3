#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "granum/error.hpp"
#include "granum/experiment.hpp"
#include "granum/report.hpp"

using namespace granum;
using namespace granum::experiment;
using models::ModelId;

namespace fs = std::filesystem;

namespace {

constexpr double kReferenceTestMean = 628.53;

struct ReferenceRow {
  double rmse;
  std::array<double, 5> day;
  double time;
};

// CNN#1 rounds as printed in the source's first results table.
const std::vector<ReferenceRow> kCnn1Rounds = {
    {3.840, {2.90, 3.60, 3.90, 4.20, 4.50}, 85.62},
    {5.471, {4.50, 5.30, 5.30, 5.80, 7.40}, 81.07},
    {4.370, {2.90, 4.10, 4.80, 4.70, 5.00}, 83.17},
    {3.804, {3.00, 3.50, 3.80, 4.10, 4.40}, 83.49},
    {3.840, {3.00, 3.50, 3.90, 4.20, 4.50}, 80.57},
    {3.964, {3.20, 3.80, 4.00, 4.20, 4.50}, 82.74},
    {4.138, {3.20, 3.50, 4.50, 4.60, 4.60}, 82.67},
    {3.852, {3.00, 3.40, 3.80, 4.20, 4.50}, 86.20},
    {4.364, {3.60, 4.30, 4.40, 4.80, 4.60}, 83.98},
    {3.944, {2.90, 3.90, 3.90, 4.10, 4.70}, 84.64},
};

const std::vector<double> kCnn2Rmse = {3.994, 3.544, 4.833, 3.774, 3.913,
                                          3.739, 3.583, 4.454, 3.635, 3.796};

std::vector<RoundResult> rounds_from(const std::vector<ReferenceRow> &rows,
                                     ModelId id = ModelId::CNN1) {
  std::vector<RoundResult> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RoundResult r{id, i, 42 + i, {}, {}};
    r.eval.overall_rmse = rows[i].rmse;
    r.eval.per_day_rmse = rows[i].day;
    r.eval.wall_time_seconds = rows[i].time;
    r.eval.test_mean_open = kReferenceTestMean;
    r.eval.ratio = rows[i].rmse / kReferenceTestMean;
    for (std::size_t d = 0; d < 5; ++d)
      r.eval.per_day_ratio[d] = rows[i].day[d] / kReferenceTestMean;
    r.eval.records.push_back({data::parse_date("2014-01-06"),
                              {1, 2, 3, 4, 5},
                              {1.5, 2, 3, 4, 5 + static_cast<double>(i)}});
    out.push_back(r);
  }
  return out;
}

std::vector<RoundResult> rmse_rounds(const std::vector<double> &rmse) {
  std::vector<ReferenceRow> rows;
  for (double v : rmse)
    rows.push_back({v, {v, v, v, v, v}, 1.0});
  return rounds_from(rows);
}

SummaryStats stats(ModelId id, std::optional<double> time, double ratio) {
  SummaryStats s;
  s.model = id;
  if (time) {
    ColumnStats t;
    t.mean = *time;
    s.time = t;
  }
  s.ratio.mean = ratio;
  return s;
}

std::vector<ModelId> order_by(const std::vector<ComparisonRow> &rows,
                              std::size_t ComparisonRow::*rank) {
  std::vector<ModelId> out(rows.size());
  for (const auto &r : rows)
    out.at(r.*rank - 1) = r.model;
  return out;
}

std::string slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::map<std::string, std::string> tree(const fs::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

fs::path fresh_dir(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("granum_test_experiment_" + name);
  fs::remove_all(dir);
  return dir;
}

data::SeriesDataset small_dataset() {
  auto weeks = data::build_weeks(data::synthesize(30, 42)).weeks;
  return data::split(weeks, weeks[19].friday());
}

} // namespace

TEST_CASE("describe") {
  const std::vector<double> same{2.5, 2.5, 2.5};
  auto s = describe(same);
  CHECK(s.mean == 2.5);
  CHECK(s.sd.value() == 0.0);
  const std::vector<double> one{4.0};
  CHECK_FALSE(describe(one).sd.has_value());
  CHECK_THROWS_AS(describe(std::vector<double>{}), DataError);
}

TEST_CASE("summarize reproduces the CNN#1 aggregate rows") {
  const auto s = summarize(rounds_from(kCnn1Rounds));
  CHECK(s.rounds == 10);
  CHECK(std::abs(s.rmse.mean - 4.1587) < 5e-5);
  CHECK(s.rmse.min == 3.804);
  CHECK(s.rmse.max == 5.471);
  CHECK(std::abs(*s.rmse.sd - 0.507) <= 0.001);

  // Population SD would give about 0.481, which the printed table rules out.
  double ss = 0;
  for (const auto &r : kCnn1Rounds)
    ss += (r.rmse - s.rmse.mean) * (r.rmse - s.rmse.mean);
  CHECK(std::abs(std::sqrt(ss / 10) - 0.481) < 0.001);

  const std::array<double, 5> day_mean{3.22, 3.89, 4.23, 4.49, 4.87};
  const std::array<double, 5> day_sd{0.50, 0.58, 0.51, 0.53, 0.90};
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(std::abs(s.per_day[d].mean - day_mean[d]) < 0.005 + 1e-12);
    CHECK(std::abs(*s.per_day[d].sd - day_sd[d]) < 0.005 + 1e-12);
  }
  CHECK(std::abs(s.time->mean - 83.42) < 0.005);
  CHECK(s.time->min == 80.57);
  CHECK(s.time->max == 86.20);
  CHECK(std::abs(*s.time->sd - 1.80) < 0.005);
  CHECK(std::abs(s.ratio.mean - 0.0066) < 5e-5);
  CHECK(s.test_mean_open == kReferenceTestMean);
}

TEST_CASE("summarize reproduces the CNN#2 RMSE column") {
  const auto s = summarize(rmse_rounds(kCnn2Rmse));
  CHECK(std::abs(s.rmse.mean - 3.9265) < 5e-5);
  CHECK(std::abs(*s.rmse.sd - 0.4122) < 5e-4);
  CHECK(s.rmse.min == 3.544);
  CHECK(s.rmse.max == 4.833);
}

TEST_CASE("summarize properties") {
  SUBCASE("identical rounds") {
    const auto s = summarize(rmse_rounds({4, 4, 4}));
    CHECK(*s.rmse.sd == 0.0);
    CHECK(s.rmse.mean == 4.0);
  }
  SUBCASE("single round has no SD") {
    const auto s = summarize(rmse_rounds({4}));
    CHECK_FALSE(s.rmse.sd.has_value());
    CHECK(s.rmse.min == 4.0);
  }
  SUBCASE("empty") {
    CHECK_THROWS_AS(summarize(std::vector<RoundResult>{}), DataError);
  }
  SUBCASE("time can be left out") {
    CHECK_FALSE(summarize(rounds_from(kCnn1Rounds), false).time.has_value());
  }
  SUBCASE("permutation invariant and ordered") {
    RandomSource rs(1);
    auto rounds = rounds_from(kCnn1Rounds);
    const auto ref = summarize(rounds);
    for (int trial = 0; trial < 20; ++trial) {
      for (std::size_t i = rounds.size(); i > 1; --i)
        std::swap(rounds[i - 1], rounds[rs.below(i)]);
      const auto s = summarize(rounds);
      CHECK(s.rmse.mean == ref.rmse.mean);
      CHECK(*s.rmse.sd == *ref.rmse.sd);
      CHECK(s.time->mean == ref.time->mean);
      for (std::size_t d = 0; d < 5; ++d)
        CHECK(s.per_day[d].mean == ref.per_day[d].mean);
      CHECK(s.rmse.min <= s.rmse.mean);
      CHECK(s.rmse.mean <= s.rmse.max);
    }
  }
}

TEST_CASE("rank_models reproduces the comparison table") {
  const std::vector<SummaryStats> reference = {
      stats(ModelId::CNN1, 83.42, 0.00662),  stats(ModelId::CNN2, 87.29, 0.00625),
      stats(ModelId::CNN3, 116.45, 0.00905), stats(ModelId::LSTM1, 330.75, 0.00711),
      stats(ModelId::LSTM2, 544.42, 0.00710), stats(ModelId::LSTM3, 306.41, 0.00839),
      stats(ModelId::LSTM4, 838.92, 0.11461)};
  const auto rows = rank_models(reference);
  using enum ModelId;
  CHECK(order_by(rows, &ComparisonRow::time_rank) ==
        std::vector{CNN1, CNN2, CNN3, LSTM3, LSTM1, LSTM2, LSTM4});
  CHECK(order_by(rows, &ComparisonRow::ratio_rank) ==
        std::vector{CNN2, CNN1, LSTM2, LSTM1, LSTM3, CNN3, LSTM4});
}

TEST_CASE("rank_models tie rules") {
  using enum ModelId;
  const auto single = rank_models(std::vector{stats(LSTM2, 5.0, 0.1)});
  CHECK(single[0].time_rank == 1);
  CHECK(single[0].ratio_rank == 1);

  const auto tied = rank_models(
      std::vector{stats(LSTM1, 2.0, 0.01), stats(CNN3, 1.0, 0.01)});
  CHECK(order_by(tied, &ComparisonRow::ratio_rank) == std::vector{CNN3, LSTM1});

  const auto untimed = rank_models(std::vector{
      stats(LSTM4, std::nullopt, 0.2), stats(CNN2, std::nullopt, 0.3),
      stats(LSTM1, std::nullopt, 0.1)});
  CHECK(order_by(untimed, &ComparisonRow::time_rank) ==
        std::vector{CNN2, LSTM1, LSTM4});
  CHECK(order_by(untimed, &ComparisonRow::ratio_rank) ==
        std::vector{LSTM1, LSTM4, CNN2});
}

TEST_CASE("per-model table layout") {
  const auto rounds = rounds_from(kCnn1Rounds);
  const auto table = report::make_table(rounds, summarize(rounds));
  REQUIRE(table.rows.size() == 10 + 4 + 1);
  CHECK(table.rows[0].label == "1");
  CHECK(table.rows[9].label == "10");
  CHECK(table.rows[10].label == "Mean");
  CHECK(table.rows[13].label == "SD");
  const auto &ratio = table.rows[14];
  CHECK(ratio.label == "RMSE/Mean");
  CHECK(std::abs(*ratio.rmse - 0.00662) < 5e-6);
  CHECK(std::abs(*ratio.day[0] - 0.005123) < 5e-6);
  CHECK_FALSE(ratio.time.has_value());
}

TEST_CASE("report CSVs round-trip") {
  const auto rounds = rounds_from(kCnn1Rounds);
  auto table = report::make_table(rounds, summarize(rounds));
  table.rows[3].rmse = 0.1 + 0.2; // needs all 17 significant digits
  std::stringstream ss;
  report::write_rounds_csv(ss, table);
  CHECK(ss.str().rfind("round,rmse,mon,tue,wed,thu,fri,time_s\n", 0) == 0);
  const std::string first = ss.str();
  const auto back = report::read_rounds_csv(ss, ModelId::CNN1);
  CHECK(back == table);
  std::ostringstream again;
  report::write_rounds_csv(again, back);
  CHECK(again.str() == first);

  std::istringstream bad("round,rmse\n");
  CHECK_THROWS_AS(report::read_rounds_csv(bad, ModelId::CNN1), ParseError);
  std::istringstream bad_number("round,rmse,mon,tue,wed,thu,fri,time_s\n1,x,1,1,1,1,1,1\n");
  CHECK_THROWS_AS(report::read_rounds_csv(bad_number, ModelId::CNN1), ParseError);
}

TEST_CASE("comparison CSV reproduces its own ranking") {
  using enum ModelId;
  const std::vector<SummaryStats> s = {stats(CNN1, 3.5, 0.02), stats(LSTM1, 1.25, 0.01),
                                       stats(CNN3, 2.0, 0.03)};
  const auto rows = rank_models(s);
  std::stringstream ss;
  report::write_comparison_csv(ss, rows);
  CHECK(ss.str() == "rank,time_model,mean_time_s,ratio_model,mean_ratio\n"
                    "1,lstm1,1.25,lstm1,0.01\n"
                    "2,cnn3,2,cnn1,0.02\n"
                    "3,cnn1,3.5,cnn3,0.03\n");
  const auto back = report::read_comparison_csv(ss);
  REQUIRE(back.size() == 3);
  std::vector<SummaryStats> re;
  for (const auto &r : back)
    re.push_back(stats(r.model, r.mean_time, r.mean_ratio));
  const auto reranked = rank_models(re);
  std::ostringstream again;
  report::write_comparison_csv(again, reranked);
  CHECK(again.str() == ss.str());
}

TEST_CASE("per-round figure data") {
  const auto rounds = rounds_from(kCnn1Rounds);
  std::ostringstream os;
  report::write_perday_csv(os, rounds[4].eval);
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line))
    lines.push_back(line);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "day,rmse,ratio");
  CHECK(lines[1].rfind("Mon,3,", 0) == 0);
  CHECK(lines[5].rfind("Fri,4.5,", 0) == 0);
}

TEST_CASE("emit_report writes the layout and is idempotent") {
  const auto dir = fresh_dir("emit");
  std::vector<report::ModelResults> results;
  std::vector<SummaryStats> summaries;
  for (auto id : {ModelId::CNN1, ModelId::LSTM2}) {
    auto rounds = rounds_from(kCnn1Rounds, id);
    auto s = summarize(rounds);
    summaries.push_back(s);
    results.push_back({rounds, s});
  }
  const auto cmp = rank_models(summaries);
  report::emit_report(results, cmp, dir);
  for (const char *f : {"comparison.csv", "report.txt", "cnn1/rounds.csv",
                        "cnn1/round_5_perday.csv", "cnn1/round_10_forecasts.csv",
                        "lstm2/rounds.csv"})
    CHECK(fs::exists(dir / f));
  const auto first = tree(dir);
  report::emit_report(results, cmp, dir);
  CHECK(tree(dir) == first);

  CHECK(report::render_from_directory(dir) == slurp(dir / "report.txt"));
  CHECK(slurp(dir / "report.txt").find("CNN#1") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("untimed tables write NA") {
  const auto dir = fresh_dir("untimed");
  auto rounds = rounds_from(kCnn1Rounds);
  const auto s = summarize(rounds, false);
  report::emit_report(std::vector<report::ModelResults>{{rounds, s}},
                      rank_models(std::vector{s}), dir);
  const auto csv = slurp(dir / "cnn1/rounds.csv");
  CHECK(csv.find("\n1,3.84,2.9,3.6,3.9,4.2,4.5,NA\n") != std::string::npos);
  CHECK(slurp(dir / "comparison.csv") ==
        "rank,time_model,mean_time_s,ratio_model,mean_ratio\n1,cnn1,NA,cnn1," +
            data::format_number(s.ratio.mean) + "\n");
  fs::remove_all(dir);
}

TEST_CASE("emit_report reports unwritable destinations") {
  const auto dir = fresh_dir("blocked");
  fs::create_directories(dir);
  { std::ofstream(dir / "file") << "x"; }
  auto rounds = rounds_from(kCnn1Rounds);
  const auto s = summarize(rounds);
  CHECK_THROWS_AS(report::emit_report(std::vector<report::ModelResults>{{rounds, s}},
                                      rank_models(std::vector{s}), dir / "file"),
                  PersistenceError);
  fs::remove_all(dir);
}

TEST_CASE("run_rounds is seeded and reproducible") {
  const auto ds = small_dataset();
  ExperimentConfig cfg;
  cfg.train.epochs = 3;
  const auto a = run_rounds(ModelId::CNN1, ds, 2, 42, cfg);
  const auto b = run_rounds(ModelId::CNN1, ds, 2, 42, cfg);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].round == i);
    CHECK(a[i].seed == 42 + i);
    CHECK(a[i].eval.records == b[i].eval.records);
    CHECK(a[i].eval.overall_rmse == b[i].eval.overall_rmse);
    CHECK(a[i].epoch_losses == b[i].epoch_losses);
  }
  CHECK(a[0].eval.overall_rmse != a[1].eval.overall_rmse);
  CHECK(run_rounds(ModelId::CNN1, ds, 1, 42, cfg).size() == 1);

  // Round i with base seed s equals round 0 with base seed s + i.
  const auto shifted = run_rounds(ModelId::CNN1, ds, 1, 43, cfg);
  CHECK(shifted[0].eval.records == a[1].eval.records);

  cfg.jobs = 3;
  const auto parallel = run_rounds(ModelId::CNN1, ds, 2, 42, cfg);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(parallel[i].eval.records == a[i].eval.records);

  CHECK_THROWS_AS(run_rounds(ModelId::CNN1, ds, 0, 42, cfg), ConfigError);
}

TEST_CASE("weekly retraining changes later forecasts only") {
  const auto ds = small_dataset();
  ExperimentConfig cfg;
  cfg.train.epochs = 3;
  const auto once = run_round(ModelId::CNN1, ds, 0, 5, cfg);
  cfg.retrain = RetrainMode::Weekly;
  const auto weekly = run_round(ModelId::CNN1, ds, 0, 5, cfg);
  REQUIRE(weekly.eval.records.size() == once.eval.records.size());
  CHECK(weekly.eval.records.front() == once.eval.records.front());
  CHECK(!(weekly.eval.records.back() == once.eval.records.back()));
}

TEST_CASE("run_round errors carry through") {
  auto weeks = data::build_weeks(data::synthesize(10, 1)).weeks;
  const auto no_train = data::split(weeks, weeks[0].monday - std::chrono::days(3));
  CHECK_THROWS_AS(run_round(ModelId::CNN1, no_train, 0, 1, {}), DataError);
}

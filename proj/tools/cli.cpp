// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "granum/data.hpp"
#include "granum/error.hpp"
#include "granum/experiment.hpp"
#include "granum/models.hpp"
#include "granum/nn/grad_check.hpp"
#include "granum/report.hpp"
#include "granum/walkforward.hpp"

namespace granum::cli {

namespace fs = std::filesystem;
using models::ModelId;

namespace {

constexpr const char *kDefaultTrainEnd = "2013-12-30";
constexpr std::uint64_t kDefaultSeed = 42;

/// Thrown for bad input that CLI11 cannot see, such as a malformed
/// GRANUM_SEED. Reported as a usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw PersistenceError("cannot open " + path.string());
  return is;
}

std::ofstream open_output(const fs::path &path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw PersistenceError("cannot open " + path.string() + " for writing");
  return os;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads a flat key=value file into `--key=value` arguments. Blank lines and
/// lines starting with '#' are skipped.
std::vector<std::string> config_arguments(const fs::path &path) {
  auto is = open_input(path);
  std::vector<std::string> args;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line.front() == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(n, "expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0)
      key.erase(0, 2);
    if (key.empty() || key == "config")
      throw ParseError(n, "invalid key '" + key + "'");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

/// Finds `--config PATH` or `--config=PATH` after the subcommand.
std::optional<std::string> find_config(const std::vector<std::string> &args) {
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0)
      return args[i].substr(9);
  }
  return std::nullopt;
}

std::uint64_t parse_seed_text(const std::string &text, const char *source) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw UsageError(std::string(source) + ": invalid seed '" + text + "'");
  return v;
}

/// Flag, then GRANUM_SEED, then the built-in default.
std::uint64_t resolve_seed(const CLI::Option *opt, std::uint64_t flag_value) {
  if (opt->count() > 0)
    return flag_value;
  if (const char *env = std::getenv("GRANUM_SEED"))
    return parse_seed_text(env, "GRANUM_SEED");
  return kDefaultSeed;
}

const auto kDateValidator = CLI::Validator(
    [](std::string &s) -> std::string {
      try {
        data::parse_date(s);
        return {};
      } catch (const Error &e) {
        return e.what();
      }
    },
    "DATE", "date");

const auto kModelValidator = CLI::Validator(
    [](std::string &s) -> std::string {
      if (s == "all")
        return {};
      try {
        models::parse_model_id(s);
        return {};
      } catch (const Error &e) {
        return e.what();
      }
    },
    "MODEL", "model");

std::vector<ModelId> model_list(const std::string &text) {
  if (text == "all")
    return {models::kAllModels.begin(), models::kAllModels.end()};
  return {models::parse_model_id(text)};
}

data::SeriesDataset load_dataset(const fs::path &path, data::Date boundary,
                                 std::string &stage, std::ostream &err) {
  stage = "load data";
  auto is = open_input(path);
  const auto bars = data::read_daily_csv(is);
  stage = "build weeks";
  auto built = data::build_weeks(bars);
  if (!built.excluded.empty())
    err << data::format_exclusions(built.excluded);
  stage = "split";
  return data::split(std::move(built.weeks), boundary);
}

void print_evaluation(std::ostream &out, const walkforward::EvaluationResult &e) {
  static const char *days[5] = {"Mon", "Tue", "Wed", "Thu", "Fri"};
  char buf[128];
  std::snprintf(buf, sizeof buf, "weeks tested: %zu\noverall RMSE: %.4f\n",
                e.records.size(), e.overall_rmse);
  out << buf;
  for (std::size_t d = 0; d < 5; ++d) {
    std::snprintf(buf, sizeof buf, "  %s RMSE: %.4f  ratio: %.6f\n", days[d],
                  e.per_day_rmse[d], e.per_day_ratio[d]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "test mean open: %.4f\nRMSE/Mean: %.6f\n",
                e.test_mean_open, e.ratio);
  out << buf;
}

struct TrainingFlags {
  std::size_t epochs = 20;
  std::size_t batch = 4;
  double lr = 0.001;
  std::string scale = "zscore";

  void attach(CLI::App *sub) {
    sub->add_option("--epochs", epochs, "Training epochs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--batch", batch, "Minibatch size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--lr", lr, "Adam learning rate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--scale", scale, "Input scaling: zscore or none")
        ->capture_default_str()
        ->check(CLI::IsMember({"zscore", "none"}));
  }

  models::TrainConfig config() const {
    models::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.adam.learning_rate = lr;
    return cfg;
  }
};

} // namespace

int run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err) {
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Stock open-price forecasting with CNN and LSTM models"};
  app.name(args.empty() ? "granum" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_path,
                    "key=value file; flags on the command line take precedence");
  };

  // ingest
  auto *ingest = app.add_subcommand("ingest", "Aggregate 5-minute ticks into daily bars");
  std::string ticks_path, ingest_out;
  ingest->add_option("--ticks", ticks_path, "Tick CSV")->required();
  ingest->add_option("--out", ingest_out, "Daily CSV to write")->required();
  add_config(ingest);

  // synth
  auto *synth = app.add_subcommand("synth", "Write a synthetic daily series");
  std::size_t synth_weeks = 160;
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_start = "2012-12-31";
  data::SynthParams sp;
  synth->add_option("--weeks", synth_weeks, "Number of trading weeks")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  auto *synth_seed_opt = synth->add_option("--seed", synth_seed, "Noise seed");
  synth->add_option("--out", synth_out, "Daily CSV to write")->required();
  synth->add_option("--start", synth_start, "First Monday")
      ->capture_default_str()
      ->check(kDateValidator);
  synth->add_option("--base", sp.base, "Starting price level")->capture_default_str();
  synth->add_option("--drift", sp.drift_per_day, "Linear drift per trading day")
      ->capture_default_str();
  synth->add_option("--amplitude", sp.amplitude, "Sinusoid amplitude")
      ->capture_default_str();
  synth->add_option("--period", sp.period_days, "Sinusoid period in trading days")
      ->capture_default_str();
  synth->add_option("--noise-sd", sp.noise_sd, "Gaussian noise SD")
      ->capture_default_str();
  add_config(synth);

  // train
  auto *train = app.add_subcommand("train", "Train one model and save its weights");
  std::string train_model, train_data, train_end = kDefaultTrainEnd, train_out;
  std::uint64_t train_seed = 0;
  TrainingFlags train_flags;
  train->add_option("--model", train_model, "Model id")->required()->check(
      CLI::Validator([](std::string &s) -> std::string {
        try {
          models::parse_model_id(s);
          return {};
        } catch (const Error &e) {
          return e.what();
        }
      }, "MODEL"));
  train->add_option("--data", train_data, "Daily CSV")->required();
  train->add_option("--train-end", train_end, "Last date of the training split")
      ->capture_default_str()
      ->check(kDateValidator);
  auto *train_seed_opt = train->add_option("--seed", train_seed, "Seed");
  train_flags.attach(train);
  train->add_option("--out", train_out, "Weights file to write")->required();
  add_config(train);

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "Walk-forward pass with saved weights");
  std::string eval_weights, eval_data, eval_end, eval_forecasts;
  evaluate->add_option("--weights", eval_weights, "Weights file")->required();
  evaluate->add_option("--data", eval_data, "Daily CSV")->required();
  evaluate->add_option("--train-end", eval_end,
                       "Last date of the training split (default: the one "
                       "stored with the weights, else 2013-12-30)")
      ->check(kDateValidator);
  evaluate->add_option("--forecasts", eval_forecasts, "Forecast CSV to write");
  add_config(evaluate);

  // experiment
  auto *experiment = app.add_subcommand("experiment", "Seeded rounds, tables and ranking");
  std::string exp_model = "all", exp_data, exp_end = kDefaultTrainEnd,
              exp_out = "results", exp_retrain = "none";
  std::size_t exp_rounds = 10, exp_retrain_epochs = 1;
  std::uint64_t exp_seed = 0;
  unsigned exp_jobs = 1;
  bool exp_no_timing = false;
  TrainingFlags exp_flags;
  experiment->add_option("--model", exp_model, "Model id or 'all'")
      ->capture_default_str()
      ->check(kModelValidator);
  experiment->add_option("--data", exp_data, "Daily CSV")->required();
  experiment->add_option("--train-end", exp_end, "Last date of the training split")
      ->capture_default_str()
      ->check(kDateValidator);
  experiment->add_option("--rounds", exp_rounds, "Rounds per model")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  auto *exp_seed_opt = experiment->add_option(
      "--seed", exp_seed, "Base seed; round i uses seed + i (env GRANUM_SEED)");
  exp_flags.attach(experiment);
  experiment->add_option("--retrain", exp_retrain, "Refit after each test week")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "weekly"}));
  experiment->add_option("--retrain-epochs", exp_retrain_epochs,
                         "Epochs per weekly refit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_flag("--no-timing", exp_no_timing,
                       "Write NA instead of wall times so results are reproducible");
  experiment->add_option("--jobs", exp_jobs, "Rounds run concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  experiment->add_option("--out", exp_out, "Results directory")->capture_default_str();
  add_config(experiment);

  // gradcheck
  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string gc_model = "all";
  std::uint64_t gc_seed = 0;
  nn::GradCheckOptions gc;
  gc.max_entries_per_param = 16;
  gradcheck->add_option("--model", gc_model, "Model id or 'all'")
      ->capture_default_str()
      ->check(kModelValidator);
  auto *gc_seed_opt = gradcheck->add_option("--seed", gc_seed, "Seed");
  gradcheck->add_option("--entries", gc.max_entries_per_param,
                        "Entries probed per parameter tensor (0 = all)")
      ->capture_default_str();
  gradcheck->add_option("--step", gc.step, "Finite-difference step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_config(gradcheck);

  // report
  auto *report = app.add_subcommand("report", "Re-render tables from stored CSVs");
  std::string report_dir = "results";
  report->add_option("--results", report_dir, "Results directory")->capture_default_str();
  add_config(report);

  std::string stage = "config";
  try {
    if (auto cfg = find_config(args)) {
      const auto extra = config_arguments(*cfg);
      args.insert(args.begin() + 2, extra.begin(), extra.end());
    }
  } catch (const Error &e) {
    err << "error [config file]: " << e.what() << '\n';
    return kFailure;
  }

  std::vector<const char *> cargv;
  for (const auto &a : args)
    cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) {
      stage = "parse ticks";
      auto is = open_input(ticks_path);
      const auto ticks = data::parse_ticks(is);
      stage = "aggregate";
      const auto bars = data::aggregate_daily(ticks);
      const auto built = data::build_weeks(bars);
      stage = "write daily csv";
      auto os = open_output(ingest_out);
      data::write_daily_csv(os, bars);
      out << ticks.size() << " ticks, " << bars.size() << " daily bars, "
          << built.weeks.size() << " complete weeks, " << built.excluded.size()
          << " excluded\n";
      out << data::format_exclusions(built.excluded);
    } else if (*synth) {
      const auto seed = resolve_seed(synth_seed_opt, synth_seed);
      stage = "synthesize";
      sp.start = data::parse_date(synth_start);
      const auto bars = data::synthesize(synth_weeks, seed, sp);
      stage = "write daily csv";
      auto os = open_output(synth_out);
      data::write_daily_csv(os, bars);
      out << "wrote " << bars.size() << " daily bars (" << synth_weeks
          << " weeks, seed " << seed << ") to " << synth_out << '\n';
    } else if (*train) {
      const auto seed = resolve_seed(train_seed_opt, train_seed);
      const auto id = models::parse_model_id(train_model);
      const auto spec = models::model_spec(id);
      const auto boundary = data::parse_date(train_end);
      const auto dataset = load_dataset(train_data, boundary, stage, err);
      stage = "train";
      const auto train_bars = dataset.train_bars();
      const data::Scaler scaler = train_flags.scale == "zscore"
                                      ? data::Scaler::fit(train_bars)
                                      : data::Scaler{};
      const auto samples = data::make_training_samples(train_bars, spec.n_days,
                                                       spec.features, scaler);
      RandomSource init(seed);
      auto net = models::build(id, models::ModelOverrides{}, init);
      auto cfg = train_flags.config();
      cfg.seed = derive_seed(seed, 1);
      const auto log = models::train(net, samples, cfg);
      net.metadata["scaler"] = scaler.to_string();
      net.metadata["train_end"] = train_end;
      net.metadata["seed"] = std::to_string(seed);
      stage = "save weights";
      models::save_weights(net, train_out);
      out << models::model_label(id) << ": " << samples.size() << " samples, "
          << cfg.epochs << " epochs, final loss "
          << data::format_number(log.epoch_losses.back()) << '\n';
      out << "weights written to " << train_out << '\n';
    } else if (*evaluate) {
      stage = "load weights";
      const auto net = models::load_weights(eval_weights);
      const auto id = models::network_model(net);
      const auto spec = models::model_spec(id);
      data::Scaler scaler;
      if (auto it = net.metadata.find("scaler"); it != net.metadata.end())
        scaler = data::Scaler::from_string(it->second);
      std::string end = eval_end;
      if (end.empty()) {
        auto it = net.metadata.find("train_end");
        end = it != net.metadata.end() ? it->second : kDefaultTrainEnd;
      }
      const auto dataset = load_dataset(eval_data, data::parse_date(end), stage, err);
      stage = "evaluate";
      const auto result = walkforward::walk_forward_evaluate(
          net, dataset, scaler, {spec.n_days, spec.features, {}});
      out << models::model_label(id) << " (train end " << end << ")\n";
      print_evaluation(out, result);
      if (!eval_forecasts.empty()) {
        stage = "write forecasts";
        auto os = open_output(eval_forecasts);
        walkforward::write_forecasts_csv(os, result.records);
      }
    } else if (*experiment) {
      const auto seed = resolve_seed(exp_seed_opt, exp_seed);
      const auto ids = model_list(exp_model);
      const auto dataset = load_dataset(exp_data, data::parse_date(exp_end), stage, err);

      experiment::ExperimentConfig cfg;
      cfg.train = exp_flags.config();
      cfg.scale = exp_flags.scale == "zscore";
      cfg.retrain = exp_retrain == "weekly" ? experiment::RetrainMode::Weekly
                                            : experiment::RetrainMode::None;
      cfg.retrain_epochs = exp_retrain_epochs;
      cfg.record_time = !exp_no_timing;
      cfg.jobs = exp_jobs;

      std::vector<report::ModelResults> results;
      std::vector<experiment::SummaryStats> summaries;
      for (auto id : ids) {
        stage = "experiment " + std::string(models::model_key(id));
        auto rounds = experiment::run_rounds(id, dataset, exp_rounds, seed, cfg);
        auto summary = experiment::summarize(rounds, cfg.record_time);
        err << models::model_label(id) << ": " << exp_rounds
            << " rounds, mean RMSE " << data::format_number(summary.rmse.mean)
            << ", RMSE/Mean " << data::format_number(summary.ratio.mean) << '\n';
        summaries.push_back(summary);
        results.push_back({std::move(rounds), summary});
      }
      stage = "rank";
      const auto comparison = experiment::rank_models(summaries);
      stage = "write report";
      report::emit_report(results, comparison, exp_out);

      std::map<std::string, std::string> used{
          {"batch", std::to_string(exp_flags.batch)},
          {"data", exp_data},
          {"epochs", std::to_string(exp_flags.epochs)},
          {"jobs", std::to_string(exp_jobs)},
          {"lr", data::format_number(exp_flags.lr)},
          {"model", exp_model},
          {"no-timing", exp_no_timing ? "true" : "false"},
          {"out", exp_out},
          {"retrain", exp_retrain},
          {"retrain-epochs", std::to_string(exp_retrain_epochs)},
          {"rounds", std::to_string(exp_rounds)},
          {"scale", exp_flags.scale},
          {"seed", std::to_string(seed)},
          {"train-end", exp_end},
      };
      auto os = open_output(fs::path(exp_out) / "config_used");
      for (const auto &[k, v] : used)
        os << k << '=' << v << '\n';
      if (!os)
        throw PersistenceError("write to config_used failed");
      out << report::render_from_directory(exp_out);
    } else if (*gradcheck) {
      gc.seed = resolve_seed(gc_seed_opt, gc_seed);
      bool ok = true;
      for (auto id : model_list(gc_model)) {
        stage = "gradcheck " + std::string(models::model_key(id));
        auto net = models::build(id, gc.seed);
        RandomSource rs(derive_seed(gc.seed, 7));
        const auto x = uniform(rs, models::model_spec(id).input_shape(), -1.0, 1.0);
        const auto y = uniform(rs, net.output_shape(), -1.0, 1.0);
        const auto rep = nn::grad_check(net, x, y, gc);
        out << models::model_label(id) << " (seed " << gc.seed << ")\n";
        char buf[160];
        for (const auto &p : rep.params) {
          std::snprintf(buf, sizeof buf, "  layer %zu %-22s %-4s n=%-4zu rel %.3e\n",
                        p.layer, p.layer_kind.c_str(), p.name.c_str(),
                        p.entries_checked, p.relative_error);
          out << buf;
        }
        for (const auto &l : rep.layers) {
          std::snprintf(buf, sizeof buf, "  layer %zu %-22s all  rel %.3e\n",
                        l.layer, l.layer_kind.c_str(), l.relative_error);
          out << buf;
        }
        std::snprintf(buf, sizeof buf,
                      "  max relative error %.3e (tolerance %.1e) %s; "
                      "worst single tensor %.3e\n",
                      rep.max_relative_error, rep.tolerance,
                      rep.passed() ? "PASS" : "FAIL", rep.max_tensor_error);
        out << buf;
        ok = ok && rep.passed();
      }
      if (!ok) {
        err << "error [gradcheck]: relative error above tolerance\n";
        return kFailure;
      }
    } else if (*report) {
      stage = "report";
      out << report::render_from_directory(report_dir);
    }
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    err << "error [" << stage << "]: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

} // namespace granum::cli

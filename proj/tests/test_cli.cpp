#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "granum");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = granum::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
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

std::size_t count_lines(const std::string &s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / ("granum_test_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &leaf) const { return (path / leaf).string(); }
};

// 40 synthetic weeks; week 30 ends on 2013-07-26.
std::string synth_data(const TempDir &dir) {
  const auto path = dir / "daily.csv";
  REQUIRE(run({"synth", "--weeks", "40", "--seed", "3", "--out", path}).code == 0);
  return path;
}

} // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"fly"}).code == 2);
  CHECK(run({"synth", "--weeks", "3"}).code == 2); // --out missing
  CHECK(run({"synth", "--out", "x.csv", "--bogus"}).code == 2);
  CHECK(run({"experiment", "--data", "d.csv", "--train-end", "2013-13-01"}).code == 2);
  CHECK(run({"experiment", "--data", "d.csv", "--model", "cnn9"}).code == 2);
  CHECK(run({"experiment", "--data", "d.csv", "--rounds", "0"}).code == 2);
  CHECK(run({"experiment", "--data", "d.csv", "--scale", "minmax"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("experiment") != std::string::npos);
  CHECK(run({"experiment", "--help"}).code == 0);
}

TEST_CASE("synth is deterministic") {
  TempDir dir("synth");
  REQUIRE(run({"synth", "--weeks", "8", "--seed", "5", "--out", dir / "a.csv"}).code == 0);
  REQUIRE(run({"synth", "--weeks", "8", "--seed", "5", "--out", dir / "b.csv"}).code == 0);
  REQUIRE(run({"synth", "--weeks", "8", "--seed", "6", "--out", dir / "c.csv"}).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
  CHECK(count_lines(slurp(dir / "a.csv")) == 41);
}

TEST_CASE("experiment writes the results layout") {
  TempDir dir("experiment");
  const auto data = synth_data(dir);
  const auto out = dir / "results";
  const auto r = run({"experiment", "--model", "cnn1", "--rounds", "10", "--data", data,
                      "--train-end", "2013-07-26", "--epochs", "3", "--out", out});
  REQUIRE(r.code == 0);
  const auto rounds = slurp(fs::path(out) / "cnn1" / "rounds.csv");
  CHECK(count_lines(rounds) == 1 + 10 + 4 + 1);
  CHECK(rounds.find("\n10,") != std::string::npos);
  for (int i = 1; i <= 10; ++i)
    CHECK(fs::exists(fs::path(out) / "cnn1" / ("round_" + std::to_string(i) + "_perday.csv")));
  CHECK(fs::exists(fs::path(out) / "comparison.csv"));
  CHECK(r.out == slurp(fs::path(out) / "report.txt"));

  const auto used = slurp(fs::path(out) / "config_used");
  for (const char *line : {"epochs=3\n", "model=cnn1\n", "rounds=10\n", "seed=42\n",
                           "train-end=2013-07-26\n", "scale=zscore\n", "retrain=none\n"})
    CHECK(used.find(line) != std::string::npos);

  const auto again = run({"report", "--results", out});
  CHECK(again.code == 0);
  CHECK(again.out == r.out);
}

TEST_CASE("experiment output is reproducible without timing") {
  TempDir dir("repro");
  const auto data = synth_data(dir);
  const std::vector<std::string> args = {"experiment", "--model",  "cnn2", "--rounds",
                                         "2", "--data", data, "--train-end",
                                         "2013-07-26", "--epochs", "2", "--no-timing",
                                         "--out", dir / "r"};
  REQUIRE(run(args).code == 0);
  const auto first = tree(dir.path / "r");
  fs::remove_all(dir.path / "r");
  REQUIRE(run(args).code == 0);
  CHECK(tree(dir.path / "r") == first);
  CHECK(first.at("cnn2/rounds.csv").find(",NA\n") != std::string::npos);
}

TEST_CASE("data and configuration failures exit 1 naming the stage") {
  TempDir dir("failures");
  const auto data = synth_data(dir);
  SUBCASE("boundary inside a week") {
    const auto r = run({"experiment", "--data", data, "--train-end", "2013-07-24"});
    CHECK(r.code == 1);
    CHECK(r.err.find("[split]") != std::string::npos);
    CHECK(r.err.find("splits the week") != std::string::npos);
  }
  SUBCASE("missing data file") {
    const auto r = run({"experiment", "--data", dir / "nope.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("[load data]") != std::string::npos);
  }
  SUBCASE("malformed data") {
    { std::ofstream(dir / "bad.csv") << "date,open,high,low,close,volume\n2013-01-07,1,2\n"; }
    const auto r = run({"experiment", "--data", dir / "bad.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
  }
  SUBCASE("empty test split") {
    const auto r = run({"experiment", "--data", data, "--train-end", "2014-06-06",
                        "--model", "cnn1", "--out", dir / "r"});
    CHECK(r.code == 1);
    CHECK(r.err.find("[experiment cnn1]") != std::string::npos);
  }
}

TEST_CASE("seed precedence: flag, then GRANUM_SEED, then 42") {
  TempDir dir("seed");
  const auto data = synth_data(dir);
  auto seed_used = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = {"experiment", "--model", "cnn1", "--rounds", "1",
                                     "--epochs", "1", "--data", data, "--train-end",
                                     "2013-07-26", "--out", dir / "r"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run(args).code == 0);
    const auto used = slurp(dir.path / "r" / "config_used");
    const auto at = used.find("seed=");
    return used.substr(at, used.find('\n', at) - at);
  };
  ::unsetenv("GRANUM_SEED");
  CHECK(seed_used({}) == "seed=42");
  ::setenv("GRANUM_SEED", "17", 1);
  CHECK(seed_used({}) == "seed=17");
  CHECK(seed_used({"--seed", "9"}) == "seed=9");
  ::setenv("GRANUM_SEED", "seventeen", 1);
  CHECK(run({"experiment", "--data", data, "--train-end", "2013-07-26"}).code == 2);
  ::unsetenv("GRANUM_SEED");
}

TEST_CASE("config file values yield to flags") {
  TempDir dir("config");
  const auto data = synth_data(dir);
  {
    std::ofstream os(dir / "run.cfg");
    os << "# experiment settings\nmodel = cnn1\nrounds=2\nepochs=1\ndata=" << data
       << "\ntrain-end=2013-07-26\nseed=5\nno-timing=true\nout=" << (dir / "r") << "\n";
  }
  REQUIRE(run({"experiment", "--config", dir / "run.cfg", "--seed", "8"}).code == 0);
  const auto used = slurp(dir.path / "r" / "config_used");
  CHECK(used.find("rounds=2\n") != std::string::npos);
  CHECK(used.find("seed=8\n") != std::string::npos);
  CHECK(used.find("no-timing=true\n") != std::string::npos);

  // config_used is itself a valid config file.
  fs::copy_file(dir.path / "r" / "config_used", dir.path / "again.cfg");
  const auto first = tree(dir.path / "r");
  fs::remove_all(dir.path / "r");
  REQUIRE(run({"experiment", "--config=" + (dir / "again.cfg")}).code == 0);
  CHECK(tree(dir.path / "r") == first);

  { std::ofstream(dir / "unknown.cfg") << "colour=blue\n"; }
  CHECK(run({"experiment", "--config", dir / "unknown.cfg"}).code == 2);
  { std::ofstream(dir / "broken.cfg") << "just words\n"; }
  CHECK(run({"experiment", "--config", dir / "broken.cfg"}).code == 1);
  CHECK(run({"experiment", "--config", dir / "absent.cfg"}).code == 1);
}

TEST_CASE("train then evaluate") {
  TempDir dir("train");
  const auto data = synth_data(dir);
  const auto t = run({"train", "--model", "cnn2", "--data", data, "--train-end",
                      "2013-07-26", "--epochs", "2", "--out", dir / "w.txt"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("CNN#2") != std::string::npos);
  const auto e = run({"evaluate", "--weights", dir / "w.txt", "--data", data,
                      "--forecasts", dir / "f.csv"});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("train end 2013-07-26") != std::string::npos);
  CHECK(e.out.find("weeks tested: 10") != std::string::npos);
  CHECK(count_lines(slurp(dir / "f.csv")) == 11);

  // The same seed, epochs and split as round 0 of an experiment.
  REQUIRE(run({"experiment", "--model", "cnn2", "--rounds", "1", "--epochs", "2",
               "--data", data, "--train-end", "2013-07-26", "--out", dir / "r"})
              .code == 0);
  CHECK(slurp(dir / "f.csv") == slurp(dir.path / "r" / "cnn2" / "round_1_forecasts.csv"));

  CHECK(run({"evaluate", "--weights", dir / "missing.txt", "--data", data}).code == 1);
}

TEST_CASE("gradcheck") {
  const auto r = run({"gradcheck", "--model", "lstm3", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
  // An absurd tolerance must fail.
  CHECK(run({"gradcheck", "--model", "cnn1", "--tolerance", "1e-30"}).code == 1);
}

TEST_CASE("ingest aggregates ticks and reports exclusions") {
  TempDir dir("ingest");
  {
    std::ofstream os(dir / "ticks.csv");
    os << "date,time,open,high,low,close,volume\n";
    // Thursday and Friday of one week, then a full following week.
    for (const char *d : {"2013-01-03", "2013-01-04", "2013-01-07", "2013-01-08",
                          "2013-01-09", "2013-01-10", "2013-01-11"}) {
      os << d << ",09:15,100,102,99,101,10\n";
      os << d << ",09:20,101,105,100,104,20\n";
    }
  }
  const auto r = run({"ingest", "--ticks", dir / "ticks.csv", "--out", dir / "daily.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("14 ticks, 7 daily bars, 1 complete weeks, 1 excluded") !=
        std::string::npos);
  CHECK(r.out.find("EXCLUDED 2012-12-31 reason=partial") != std::string::npos);
  const auto daily = slurp(dir / "daily.csv");
  CHECK(daily.find("2013-01-07,100,105,99,104,30\n") != std::string::npos);

  { std::ofstream(dir / "bad.csv") << "date,time,open,high,low,close,volume\n2013-01-07,09:15,1,0.5,2,1,1\n"; }
  const auto bad = run({"ingest", "--ticks", dir / "bad.csv", "--out", dir / "x.csv"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("[parse ticks]") != std::string::npos);
}

TEST_CASE("report on a missing directory") {
  CHECK(run({"report", "--results", "/nonexistent/granum"}).code == 1);
}

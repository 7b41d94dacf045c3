#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "granum/error.hpp"
#include "granum/models.hpp"
#include "granum/nn/layers.hpp"

using namespace granum;
using namespace granum::models;

namespace {

const std::vector<Shape> kCandidateShapes = {{5, 1},  {10, 1}, {10, 5}, {5, 5},
                                             {7, 1},  {10},    {5},     {10, 5, 1},
                                             {10, 4}, {11, 5}};

data::WindowSample sample(const Tensor &input, const Tensor &target) {
  return {input, target, data::Date{}, data::Date{}};
}

// Smaller recurrent widths keep the slow-converging tests quick.
ModelOverrides small_lstm() {
  ModelOverrides o;
  o.lstm_units = 16;
  o.lstm_dense = 16;
  return o;
}

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() /
         ("granum_test_models_" + name);
}

} // namespace

TEST_CASE("model ids and labels") {
  for (auto id : kAllModels) {
    CHECK(parse_model_id(model_key(id)) == id);
    CHECK(parse_model_id(model_label(id)) == id);
  }
  CHECK(parse_model_id("LSTM #3") == ModelId::LSTM3);
  CHECK_THROWS_AS(parse_model_id("cnn4"), ConfigError);
  CHECK_THROWS_AS(parse_model_id(""), ConfigError);
}

TEST_CASE("input shapes") {
  CHECK(model_spec(ModelId::CNN1).input_shape() == Shape{5, 1});
  CHECK(model_spec(ModelId::CNN2).input_shape() == Shape{10, 1});
  CHECK(model_spec(ModelId::CNN3).input_shape() == Shape{10, 5});
  CHECK(model_spec(ModelId::LSTM1).input_shape() == Shape{5, 1});
  CHECK(model_spec(ModelId::LSTM2).input_shape() == Shape{10, 1});
  CHECK(model_spec(ModelId::LSTM3).input_shape() == Shape{10, 1});
  CHECK(model_spec(ModelId::LSTM4).input_shape() == Shape{10, 5});
}

TEST_CASE("shape contract is exact for every model") {
  RandomSource rs(1);
  for (auto id : kAllModels) {
    CAPTURE(model_label(id));
    const auto net = build(id, 7);
    const Shape want = model_spec(id).input_shape();
    CHECK(net.input_shape() == want);
    for (const auto &shape : kCandidateShapes) {
      const Tensor x = uniform(rs, shape, -1, 1);
      if (shape == want) {
        const auto y = predict(net, x);
        CHECK(y.size() == 5);
        for (double v : y)
          CHECK(std::isfinite(v));
      } else {
        CHECK_THROWS_AS(predict(net, x), ShapeError);
      }
    }
  }
}

TEST_CASE("architectures") {
  const auto cnn3 = build(ModelId::CNN3, 1);
  const auto first = cnn3.layer(0).config();
  CHECK(first.kind == "conv1d");
  CHECK(first.get_int("filters") == 32);
  CHECK(first.get_int("kernel") == 3);

  const auto cnn1 = build(ModelId::CNN1, 1);
  CHECK(cnn1.layer(0).config().get_int("filters") == 16);
  CHECK(cnn1.output_shape() == Shape{5});

  const auto lstm1 = build(ModelId::LSTM1, 1);
  CHECK(lstm1.layer(0).config().kind == "lstm");
  CHECK(lstm1.layer(0).config().get_int("hidden") == 200);

  const auto lstm4 = build(ModelId::LSTM4, 1);
  bool has_repeat = false;
  for (std::size_t l = 0; l < lstm4.layer_count(); ++l)
    has_repeat = has_repeat || lstm4.layer(l).config().kind == "repeat_vector";
  CHECK(has_repeat);
  CHECK(network_model(lstm4) == ModelId::LSTM4);
}

TEST_CASE("overrides that break the fixed shapes are rejected") {
  RandomSource rs(2);
  ModelOverrides wide_kernel;
  wide_kernel.cnn_kernel = 6;
  CHECK_THROWS_AS(build(ModelId::CNN1, wide_kernel, rs), ConfigError);
  ModelOverrides no_units;
  no_units.lstm_units = 0;
  CHECK_THROWS_AS(build(ModelId::LSTM1, no_units, rs), ConfigError);
  ModelOverrides third_kernel;
  third_kernel.cnn3_third_kernel = 3;
  CHECK_THROWS_AS(build(ModelId::CNN3, third_kernel, rs), ConfigError);
}

TEST_CASE("build is deterministic in its seed") {
  for (auto id : kAllModels) {
    auto a = build(id, 11), b = build(id, 11), c = build(id, 12);
    auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool all_equal = true, any_diff = false;
    for (std::size_t k = 0; k < pa.size(); ++k) {
      all_equal = all_equal && *pa[k].value == *pb[k].value;
      any_diff = any_diff || !(*pa[k].value == *pc[k].value);
    }
    CHECK(all_equal);
    CHECK(any_diff);
  }
}

TEST_CASE("zero network predicts zeros and predict is pure") {
  RandomSource rs(3);
  for (auto id : kAllModels) {
    auto net = build(id, 5);
    const Tensor x = uniform(rs, model_spec(id).input_shape(), -1, 1);
    const auto first = predict(net, x);
    CHECK(predict(net, x) == first);
    for (auto &p : net.parameters())
      p.value->fill(0.0);
    for (double v : predict(net, x))
      CHECK(v == 0.0);
  }
}

TEST_CASE("train argument checks") {
  auto net = build(ModelId::CNN1, 1);
  const std::vector<data::WindowSample> one{
      sample(Tensor({5, 1}), Tensor({5}))};
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(net, one, cfg), ConfigError);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(net, one, cfg), ConfigError);
  cfg.batch_size = 4;
  CHECK_THROWS_AS(train(net, {}, cfg), DataError);
  const std::vector<data::WindowSample> wrong{
      sample(Tensor({10, 1}), Tensor({5}))};
  CHECK_THROWS_AS(train(net, wrong, cfg), ShapeError);
  const std::vector<data::WindowSample> wrong_target{
      sample(Tensor({5, 1}), Tensor({4}))};
  CHECK_THROWS_AS(train(net, wrong_target, cfg), ShapeError);
}

TEST_CASE("training is deterministic given the seed") {
  RandomSource rs(4);
  std::vector<data::WindowSample> samples;
  for (int k = 0; k < 9; ++k)
    samples.push_back(sample(uniform(rs, {5, 1}, -1, 1), uniform(rs, {5}, -1, 1)));
  TrainConfig cfg;
  cfg.seed = 42;
  auto a = build(ModelId::CNN1, 42), b = build(ModelId::CNN1, 42);
  const auto la = train(a, samples, cfg), lb = train(b, samples, cfg);
  CHECK(la.epoch_losses.size() == 20);
  CHECK(la.epoch_losses == lb.epoch_losses);
  const Tensor x = uniform(rs, {5, 1}, -1, 1);
  CHECK(predict(a, x) == predict(b, x));

  cfg.seed = 43;
  auto c = build(ModelId::CNN1, 42);
  CHECK(train(c, samples, cfg).epoch_losses != la.epoch_losses);
}

TEST_CASE("a constant series is learned") {
  for (auto id : kAllModels) {
    CAPTURE(model_label(id));
    const auto spec = model_spec(id);
    Tensor input(spec.input_shape()), target({5});
    input.fill(0.7);
    target.fill(0.7);
    const std::vector<data::WindowSample> samples(12, sample(input, target));
    RandomSource init(6);
    auto net = build(id, small_lstm(), init);
    TrainConfig cfg;
    cfg.epochs = 200;
    const auto log = train(net, samples, cfg);
    CHECK(log.epoch_losses.back() < 1e-3);
    CHECK(log.epoch_losses.back() < log.epoch_losses.front());
  }
}

TEST_CASE("every model can overfit a single sample") {
  RandomSource rs(7);
  for (auto id : kAllModels) {
    CAPTURE(model_label(id));
    const auto spec = model_spec(id);
    const auto s = sample(uniform(rs, spec.input_shape(), -1, 1),
                          uniform(rs, {5}, -1, 1));
    auto net = build(id, 7);
    TrainConfig cfg;
    cfg.epochs = 1000;
    const auto log = train(net, std::vector{s}, cfg);
    CHECK(log.epoch_losses.back() < 1e-4);
    const auto y = predict(net, s.input);
    for (std::size_t d = 0; d < 5; ++d)
      CHECK(std::abs(y[d] - s.target[d]) < 0.1);
  }
}

TEST_CASE("weights round-trip bitwise") {
  RandomSource rs(8);
  for (auto id : kAllModels) {
    auto net = build(id, 9);
    net.metadata["scaler"] = "identity";
    const auto path = temp_path(std::string(model_key(id)));
    save_weights(net, path);
    const auto loaded = load_weights(path);
    CHECK(network_model(loaded) == id);
    CHECK(loaded.metadata.at("scaler") == "identity");
    for (int k = 0; k < 5; ++k) {
      const Tensor x = uniform(rs, model_spec(id).input_shape(), -5, 5);
      CHECK(predict(loaded, x) == predict(net, x));
    }
    std::filesystem::remove(path);
  }
}

TEST_CASE("weight loading errors") {
  const auto path = temp_path("cnn1_errors");
  save_weights(build(ModelId::CNN1, 1), path);

  SUBCASE("into a different plan") {
    auto cnn3 = build(ModelId::CNN3, 1);
    CHECK_THROWS_AS(load_weights_into(cnn3, path), ShapeError);
  }
  SUBCASE("truncated") {
    std::string text;
    {
      std::ifstream is(path);
      text.assign(std::istreambuf_iterator<char>(is), {});
    }
    {
      std::ofstream os(path, std::ios::trunc);
      os << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_weights(path), PersistenceError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_weights(temp_path("does_not_exist")), PersistenceError);
  }
  std::filesystem::remove(path);
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "granum/data.hpp"
#include "granum/nn/adam.hpp"
#include "granum/nn/network.hpp"

namespace granum::models {

enum class ModelId { CNN1, CNN2, CNN3, LSTM1, LSTM2, LSTM3, LSTM4 };

inline constexpr std::array<ModelId, 7> kAllModels = {
    ModelId::CNN1,  ModelId::CNN2,  ModelId::CNN3, ModelId::LSTM1,
    ModelId::LSTM2, ModelId::LSTM3, ModelId::LSTM4};

/// Lower-case key used in files and on the command line ("cnn1").
std::string_view model_key(ModelId id);
/// Label used in rendered tables ("CNN#1").
std::string_view model_label(ModelId id);
/// Accepts "cnn1", "CNN1", "cnn#1", "CNN #1"; throws ConfigError otherwise.
ModelId parse_model_id(std::string_view text);

inline constexpr std::size_t kHorizon = 5;

struct ModelSpec {
  ModelId id;
  std::size_t n_days;
  data::FeatureSet features;

  std::size_t n_features() const { return data::feature_count(features); }
  Shape input_shape() const { return {n_days, n_features()}; }
};

ModelSpec model_spec(ModelId id);

/// Layer widths not fixed by the architecture descriptions.
struct ModelOverrides {
  std::size_t cnn_filters = 16;
  std::size_t cnn_kernel = 3;
  std::size_t cnn_hidden = 10;
  std::size_t cnn3_filters = 32;
  std::size_t cnn3_kernel = 3;
  std::size_t cnn3_third_filters = 16;
  // A kernel of 3 would leave a length-1 map ahead of the second pooling
  // layer on a 10-day input.
  std::size_t cnn3_third_kernel = 2;
  std::size_t cnn3_hidden = 100;
  std::size_t lstm_units = 200;
  std::size_t lstm_dense = 100;
  double forget_bias = 0.0;
};

/// Builds and Glorot-initialises the layer stack for `id`:
///   CNN1/CNN2: conv(16,k3) relu, maxpool 2, flatten, dense 10 relu, dense 5
///   CNN3:      conv(32,k3) relu, conv(32,k3) relu, maxpool 2,
///              conv(16,k2) relu, maxpool 2, flatten, dense 100 relu, dense 5
///   LSTM1/2:   lstm 200 (last), dense 100 relu, dense 5
///   LSTM3/4:   lstm 200 (last), repeat 5, lstm 200 (sequence),
///              td-dense 100 relu, td-dense 1, flatten
/// Throws ConfigError when overrides cannot produce a (5) output.
nn::Network build(ModelId id, const ModelOverrides &overrides,
                  RandomSource &rs);
nn::Network build(ModelId id, std::uint64_t seed);

/// Model id recorded in the network metadata by build().
ModelId network_model(const nn::Network &net);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  nn::AdamConfig adam;
  bool shuffle = true;
};

struct TrainLog {
  std::vector<double> epoch_losses;
};

/// Mini-batch Adam on MSE. Gradients are averaged within each batch and the
/// final short batch is kept. Shuffling is seeded from cfg.seed.
TrainLog train(nn::Network &net, std::span<const data::WindowSample> samples,
               const TrainConfig &cfg);

/// Five forecasts for one window; never mutates the network.
std::array<double, kHorizon> predict(const nn::Network &net,
                                     const Tensor &window);

void save_weights(const nn::Network &net, const std::filesystem::path &path);
nn::Network load_weights(const std::filesystem::path &path);
/// Loads into an existing plan; ShapeError when the stored plan differs.
void load_weights_into(nn::Network &net, const std::filesystem::path &path);

} // namespace granum::models

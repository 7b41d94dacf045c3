// SPDX-License-Identifier: Apache-2.0
#include "granum/models.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "granum/error.hpp"
#include "granum/nn/layers.hpp"
#include "granum/nn/loss.hpp"
#include "granum/nn/serialize.hpp"

namespace granum::models {

using data::FeatureSet;
using nn::Activation;

std::string_view model_key(ModelId id) {
  switch (id) {
  case ModelId::CNN1:
    return "cnn1";
  case ModelId::CNN2:
    return "cnn2";
  case ModelId::CNN3:
    return "cnn3";
  case ModelId::LSTM1:
    return "lstm1";
  case ModelId::LSTM2:
    return "lstm2";
  case ModelId::LSTM3:
    return "lstm3";
  case ModelId::LSTM4:
    return "lstm4";
  }
  return "?";
}

std::string_view model_label(ModelId id) {
  switch (id) {
  case ModelId::CNN1:
    return "CNN#1";
  case ModelId::CNN2:
    return "CNN#2";
  case ModelId::CNN3:
    return "CNN#3";
  case ModelId::LSTM1:
    return "LSTM#1";
  case ModelId::LSTM2:
    return "LSTM#2";
  case ModelId::LSTM3:
    return "LSTM#3";
  case ModelId::LSTM4:
    return "LSTM#4";
  }
  return "?";
}

ModelId parse_model_id(std::string_view text) {
  std::string key;
  for (char c : text)
    if (c != '#' && c != ' ' && c != '_')
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto id : kAllModels)
    if (model_key(id) == key)
      return id;
  throw ConfigError("unknown model '" + std::string(text) + "'");
}

ModelSpec model_spec(ModelId id) {
  switch (id) {
  case ModelId::CNN1:
    return {id, 5, FeatureSet::Univariate};
  case ModelId::CNN2:
    return {id, 10, FeatureSet::Univariate};
  case ModelId::CNN3:
    return {id, 10, FeatureSet::Multivariate};
  case ModelId::LSTM1:
    return {id, 5, FeatureSet::Univariate};
  case ModelId::LSTM2:
    return {id, 10, FeatureSet::Univariate};
  case ModelId::LSTM3:
    return {id, 10, FeatureSet::Univariate};
  case ModelId::LSTM4:
    return {id, 10, FeatureSet::Multivariate};
  }
  throw ConfigError("unknown model id");
}

namespace {

// Appends a layer sized from the network's current output shape.
std::size_t current_length(const nn::Network &net) {
  return net.output_shape()[0];
}
std::size_t current_width(const nn::Network &net) {
  return net.output_shape().back();
}

void add_cnn_head(nn::Network &net, std::size_t hidden) {
  net.emplace<nn::FlattenLayer>();
  const std::size_t flat = current_length(net);
  net.emplace<nn::DenseLayer>(flat, hidden);
  net.emplace<nn::ActivationLayer>(Activation::Relu);
  net.emplace<nn::DenseLayer>(hidden, kHorizon);
}

void add_conv(nn::Network &net, std::size_t filters, std::size_t kernel) {
  net.emplace<nn::Conv1DLayer>(filters, kernel, current_width(net));
  net.emplace<nn::ActivationLayer>(Activation::Relu);
}

} // namespace

nn::Network build(ModelId id, const ModelOverrides &o, RandomSource &rs) {
  const ModelSpec spec = model_spec(id);
  nn::Network net(spec.input_shape());
  try {
    switch (id) {
    case ModelId::CNN1:
    case ModelId::CNN2:
      add_conv(net, o.cnn_filters, o.cnn_kernel);
      net.emplace<nn::MaxPool1DLayer>(2);
      add_cnn_head(net, o.cnn_hidden);
      break;
    case ModelId::CNN3:
      add_conv(net, o.cnn3_filters, o.cnn3_kernel);
      add_conv(net, o.cnn3_filters, o.cnn3_kernel);
      net.emplace<nn::MaxPool1DLayer>(2);
      add_conv(net, o.cnn3_third_filters, o.cnn3_third_kernel);
      net.emplace<nn::MaxPool1DLayer>(2);
      add_cnn_head(net, o.cnn3_hidden);
      break;
    case ModelId::LSTM1:
    case ModelId::LSTM2:
      net.emplace<nn::LSTMLayer>(spec.n_features(), o.lstm_units, false,
                                 o.forget_bias);
      net.emplace<nn::DenseLayer>(o.lstm_units, o.lstm_dense);
      net.emplace<nn::ActivationLayer>(Activation::Relu);
      net.emplace<nn::DenseLayer>(o.lstm_dense, kHorizon);
      break;
    case ModelId::LSTM3:
    case ModelId::LSTM4:
      net.emplace<nn::LSTMLayer>(spec.n_features(), o.lstm_units, false,
                                 o.forget_bias);
      net.emplace<nn::RepeatVectorLayer>(kHorizon);
      net.emplace<nn::LSTMLayer>(o.lstm_units, o.lstm_units, true,
                                 o.forget_bias);
      net.emplace<nn::TimeDistributedDenseLayer>(o.lstm_units, o.lstm_dense);
      net.emplace<nn::ActivationLayer>(Activation::Relu);
      net.emplace<nn::TimeDistributedDenseLayer>(o.lstm_dense, 1);
      net.emplace<nn::FlattenLayer>();
      break;
    }
  } catch (const Error &e) {
    throw ConfigError(std::string(model_label(id)) +
                      ": overrides do not fit the architecture: " + e.what());
  }
  if (net.output_shape() != Shape{kHorizon})
    throw ConfigError(std::string(model_label(id)) + ": output shape " +
                      shape_string(net.output_shape()) + " is not (5)");
  net.metadata["model"] = std::string(model_key(id));
  net.initialize(rs);
  return net;
}

nn::Network build(ModelId id, std::uint64_t seed) {
  RandomSource rs(seed);
  return build(id, ModelOverrides{}, rs);
}

ModelId network_model(const nn::Network &net) {
  auto it = net.metadata.find("model");
  if (it == net.metadata.end())
    throw ConfigError("network carries no model id");
  return parse_model_id(it->second);
}

TrainLog train(nn::Network &net, std::span<const data::WindowSample> samples,
               const TrainConfig &cfg) {
  if (cfg.epochs == 0)
    throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size == 0)
    throw ConfigError("batch size must be at least 1");
  if (samples.empty())
    throw DataError("no training samples");
  const Shape out_shape = net.output_shape();
  for (const auto &s : samples) {
    if (s.input.shape() != net.input_shape())
      throw ShapeError("sample input " + shape_string(s.input.shape()) +
                       " does not match network input " +
                       shape_string(net.input_shape()));
    if (s.target.shape() != out_shape)
      throw ShapeError("sample target " + shape_string(s.target.shape()) +
                       " does not match network output " +
                       shape_string(out_shape));
  }

  RandomSource rs(cfg.seed);
  nn::Adam adam(cfg.adam);
  const auto params = net.parameters();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle)
      for (std::size_t k = order.size(); k > 1; --k)
        std::swap(order[k - 1], order[rs.below(k)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      net.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto &s = samples[order[k]];
        auto loss = nn::mse_loss(net.forward(s.input), s.target);
        epoch_loss += loss.value;
        net.backward(loss.gradient);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (const auto &p : params)
        scale_inplace(*p.grad, inv);
      adam.step(params);
    }
    log.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return log;
}

std::array<double, kHorizon> predict(const nn::Network &net,
                                     const Tensor &window) {
  const Tensor y = net.predict(window);
  if (y.size() != kHorizon)
    throw ShapeError("network does not produce 5 forecasts");
  std::array<double, kHorizon> out{};
  std::copy(y.data().begin(), y.data().end(), out.begin());
  return out;
}

void save_weights(const nn::Network &net, const std::filesystem::path &path) {
  nn::save_network(net, path);
}

nn::Network load_weights(const std::filesystem::path &path) {
  return nn::load_network(path);
}

void load_weights_into(nn::Network &net, const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw PersistenceError("cannot open " + path.string());
  nn::load_parameters_into(net, is);
}

} // namespace granum::models

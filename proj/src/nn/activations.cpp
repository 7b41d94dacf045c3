// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/activations.hpp"

#include <string>

#include "granum/error.hpp"

namespace granum::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
  case Activation::Linear:
    return "linear";
  case Activation::Relu:
    return "relu";
  case Activation::Sigmoid:
    return "sigmoid";
  case Activation::Tanh:
    return "tanh";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear")
    return Activation::Linear;
  if (name == "relu")
    return Activation::Relu;
  if (name == "sigmoid")
    return Activation::Sigmoid;
  if (name == "tanh")
    return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double apply(Activation a, double x) {
  switch (a) {
  case Activation::Relu:
    return relu(x);
  case Activation::Sigmoid:
    return sigmoid(x);
  case Activation::Tanh:
    return std::tanh(x);
  case Activation::Linear:
    break;
  }
  return x;
}

double derivative(Activation a, double x) {
  switch (a) {
  case Activation::Relu:
    return relu_derivative(x);
  case Activation::Sigmoid:
    return sigmoid_derivative(x);
  case Activation::Tanh:
    return tanh_derivative(x);
  case Activation::Linear:
    break;
  }
  return 1.0;
}

Tensor relu(const Tensor &x) { return ew_map(x, [](double v) { return relu(v); }); }
Tensor relu_derivative(const Tensor &x) {
  return ew_map(x, [](double v) { return relu_derivative(v); });
}
Tensor sigmoid(const Tensor &x) {
  return ew_map(x, [](double v) { return sigmoid(v); });
}
Tensor sigmoid_derivative(const Tensor &x) {
  return ew_map(x, [](double v) { return sigmoid_derivative(v); });
}
Tensor tanh(const Tensor &x) {
  return ew_map(x, [](double v) { return std::tanh(v); });
}
Tensor tanh_derivative(const Tensor &x) {
  return ew_map(x, [](double v) { return tanh_derivative(v); });
}

} // namespace granum::nn

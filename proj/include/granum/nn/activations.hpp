// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string_view>

#include "granum/tensor.hpp"

namespace granum::nn {

enum class Activation { Linear, Relu, Sigmoid, Tanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
/// relu'(0) is taken as 0.
inline double relu_derivative(double x) { return x > 0.0 ? 1.0 : 0.0; }

inline double sigmoid(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

inline double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

double apply(Activation a, double x);
double derivative(Activation a, double x);

Tensor relu(const Tensor &x);
Tensor relu_derivative(const Tensor &x);
Tensor sigmoid(const Tensor &x);
Tensor sigmoid_derivative(const Tensor &x);
Tensor tanh(const Tensor &x);
Tensor tanh_derivative(const Tensor &x);

} // namespace granum::nn

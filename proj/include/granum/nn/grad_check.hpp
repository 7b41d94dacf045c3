// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "granum/nn/network.hpp"

namespace granum::nn {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Entries probed per parameter tensor; 0 probes every entry. Sampled
  /// entries are drawn without replacement from a RandomSource seeded here.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct ParamCheck {
  std::size_t layer;
  std::string layer_kind;
  std::string name;
  std::size_t entries_checked;
  double relative_error;
  double analytic_norm;
  double numeric_norm;
};

/// Error over every probed entry of one layer's parameters.
struct LayerCheck {
  std::size_t layer;
  std::string layer_kind;
  double relative_error;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  std::vector<LayerCheck> layers;
  /// Largest per-layer error; this is what passed() compares.
  double max_relative_error = 0.0;
  /// Largest per-tensor error. Tensors whose sampled gradients are tiny
  /// (deep recurrent weights) sit near the finite-difference round-off floor.
  double max_tensor_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_relative_error < tolerance; }
};

/// Compares backprop gradients of the MSE loss against central differences
/// (L(theta + h) - L(theta - h)) / 2h. The error over a set of probed entries
/// is |a - n| / max(|a|, |n|, 1e-12) with |.| the Euclidean norm, computed
/// per parameter tensor and per layer. The network's weights are restored
/// exactly afterwards.
GradCheckReport grad_check(Network &net, const Tensor &input,
                           const Tensor &target,
                           const GradCheckOptions &options = {});

} // namespace granum::nn

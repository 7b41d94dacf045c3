// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "granum/random.hpp"
#include "granum/tensor.hpp"

namespace granum::nn {

/// A trainable tensor and the gradient accumulated for it.
struct ParamRef {
  std::string name;
  Tensor *value;
  Tensor *grad;
};

/// Kind plus integer/string hyperparameters; enough to rebuild a layer.
struct LayerConfig {
  std::string kind;
  std::map<std::string, std::string> attrs;

  long get_int(const std::string &key) const;
  const std::string &get(const std::string &key) const;

  bool operator==(const LayerConfig &) const = default;
};

/// Base class for every layer.
///
/// forward() caches what backward() needs; backward() accumulates into the
/// parameter gradients (never resets them) and returns the gradient with
/// respect to the forward input. infer() computes the same output as
/// forward() without touching any state.
class Layer {
public:
  virtual ~Layer() = default;

  virtual LayerConfig config() const = 0;
  virtual Shape output_shape(const Shape &input) const = 0;

  virtual Tensor forward(const Tensor &x) = 0;
  virtual Tensor infer(const Tensor &x) const = 0;
  virtual Tensor backward(const Tensor &dy) = 0;

  virtual std::vector<ParamRef> parameters() { return {}; }
  /// Glorot-uniform weights, zero biases. Parameter-free layers ignore it.
  virtual void initialize(RandomSource &) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Glorot-uniform limit sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out);
void glorot_fill(Tensor &t, RandomSource &rs, std::size_t fan_in,
                 std::size_t fan_out);

/// Recreates a zero-initialised layer from its config.
std::unique_ptr<Layer> make_layer(const LayerConfig &config);

} // namespace granum::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "granum/nn/layer.hpp"

namespace granum::nn {

/// Ordered layer stack with a fixed input shape.
///
/// Copying deep-copies every layer. forward()/backward() mutate layer caches
/// and gradients, so a network under training has a single owner; predict()
/// is const and safe to call concurrently on a frozen network.
class Network {
public:
  explicit Network(Shape input_shape);
  Network(const Network &other);
  Network &operator=(const Network &other);
  Network(Network &&) noexcept = default;
  Network &operator=(Network &&) noexcept = default;
  ~Network() = default;

  void add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args> L &emplace(Args &&...args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L &ref = *layer;
    add(std::move(layer));
    return ref;
  }

  const Shape &input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const;
  std::size_t layer_count() const noexcept { return layers_.size(); }
  Layer &layer(std::size_t i) { return *layers_.at(i); }
  const Layer &layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<LayerConfig> plan() const;

  Tensor forward(const Tensor &x);
  void backward(const Tensor &dy);
  Tensor predict(const Tensor &x) const;

  void initialize(RandomSource &rs);
  std::vector<ParamRef> parameters();
  void zero_grad();
  std::size_t parameter_count();

  /// Free-form string annotations persisted alongside the weights.
  std::map<std::string, std::string> metadata;

private:
  void check_input(const Tensor &x) const;

  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace granum::nn

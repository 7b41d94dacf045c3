// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/network.hpp"

#include "granum/error.hpp"

namespace granum::nn {

Network::Network(Shape input_shape) : input_shape_(std::move(input_shape)) {
  if (input_shape_.empty() || shape_product(input_shape_) == 0)
    throw ShapeError("network input shape must be non-empty");
}

Network::Network(const Network &other)
    : metadata(other.metadata), input_shape_(other.input_shape_) {
  layers_.reserve(other.layers_.size());
  for (const auto &l : other.layers_)
    layers_.push_back(l->clone());
}

Network &Network::operator=(const Network &other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
  // Validates the layer against the current output shape.
  layer->output_shape(output_shape());
  layers_.push_back(std::move(layer));
}

Shape Network::output_shape() const {
  Shape s = input_shape_;
  for (const auto &l : layers_)
    s = l->output_shape(s);
  return s;
}

std::vector<LayerConfig> Network::plan() const {
  std::vector<LayerConfig> out;
  out.reserve(layers_.size());
  for (const auto &l : layers_)
    out.push_back(l->config());
  return out;
}

void Network::check_input(const Tensor &x) const {
  if (x.shape() != input_shape_)
    throw ShapeError("network expects input " + shape_string(input_shape_) +
                     ", got " + shape_string(x.shape()));
}

Tensor Network::forward(const Tensor &x) {
  check_input(x);
  Tensor a = x;
  for (auto &l : layers_)
    a = l->forward(a);
  return a;
}

void Network::backward(const Tensor &dy) {
  Tensor g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g);
}

Tensor Network::predict(const Tensor &x) const {
  check_input(x);
  Tensor a = x;
  for (const auto &l : layers_)
    a = l->infer(a);
  return a;
}

void Network::initialize(RandomSource &rs) {
  for (auto &l : layers_)
    l->initialize(rs);
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> out;
  for (auto &l : layers_)
    for (auto &p : l->parameters())
      out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (auto &p : parameters())
    p.grad->fill(0.0);
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (auto &p : parameters())
    n += p.value->size();
  return n;
}

} // namespace granum::nn

// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/layers.hpp"

#include <cmath>
#include <string>

#include "granum/error.hpp"
#include "kernels.hpp"

namespace granum::nn {

namespace {

std::string str(std::size_t v) { return std::to_string(v); }

void require(bool ok, const std::string &what) {
  if (!ok)
    throw ShapeError(what);
}

void require_cached(const Tensor &cached, const char *layer) {
  if (cached.empty())
    throw ShapeError(std::string(layer) + ": backward called before forward");
}

} // namespace

long LayerConfig::get_int(const std::string &key) const {
  const auto &v = get(key);
  try {
    std::size_t pos = 0;
    long out = std::stol(v, &pos);
    if (pos != v.size())
      throw ConfigError("");
    return out;
  } catch (const std::exception &) {
    throw ConfigError(kind + ": attribute " + key + "='" + v +
                      "' is not an integer");
  }
}

const std::string &LayerConfig::get(const std::string &key) const {
  auto it = attrs.find(key);
  if (it == attrs.end())
    throw ConfigError(kind + ": missing attribute " + key);
  return it->second;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void glorot_fill(Tensor &t, RandomSource &rs, std::size_t fan_in,
                 std::size_t fan_out) {
  const double limit = glorot_limit(fan_in, fan_out);
  for (auto &v : t.data())
    v = rs.uniform(-limit, limit);
}

// ---- Dense -----------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : weights({out, in}), bias({out}), weights_grad({out, in}),
      bias_grad({out}), in_(in), out_(out) {}

LayerConfig DenseLayer::config() const {
  return {"dense", {{"in", str(in_)}, {"out", str(out_)}}};
}

Shape DenseLayer::output_shape(const Shape &input) const {
  require(input == Shape{in_}, "dense: expected input (" + str(in_) + "), got " +
                                   shape_string(input));
  return {out_};
}

Tensor DenseLayer::infer(const Tensor &x) const {
  output_shape(x.shape());
  Tensor y = bias;
  kernels::matvec_add(weights.data(), out_, in_, x.data().data(),
                      y.data().data());
  return y;
}

Tensor DenseLayer::forward(const Tensor &x) {
  Tensor y = infer(x);
  input_ = x;
  return y;
}

Tensor DenseLayer::backward(const Tensor &dy) {
  require_cached(input_, "dense");
  require(dy.shape() == Shape{out_}, "dense: bad output gradient shape " +
                                         shape_string(dy.shape()));
  kernels::outer_add(weights_grad.data(), out_, in_, dy.data().data(),
                     input_.data().data());
  add_inplace(bias_grad, dy);
  Tensor dx({in_});
  kernels::matvec_t_add(weights.data(), out_, in_, dy.data().data(),
                        dx.data().data());
  return dx;
}

std::vector<ParamRef> DenseLayer::parameters() {
  return {{"weights", &weights, &weights_grad}, {"bias", &bias, &bias_grad}};
}

void DenseLayer::initialize(RandomSource &rs) {
  glorot_fill(weights, rs, in_, out_);
  bias.fill(0.0);
}

std::unique_ptr<Layer> DenseLayer::clone() const {
  return std::make_unique<DenseLayer>(*this);
}

// ---- Conv1D ----------------------------------------------------------------

Conv1DLayer::Conv1DLayer(std::size_t n_filters, std::size_t kernel,
                         std::size_t channels)
    : filters({n_filters, kernel, channels}), bias({n_filters}),
      filters_grad({n_filters, kernel, channels}), bias_grad({n_filters}),
      n_filters_(n_filters), kernel_(kernel), channels_(channels) {}

LayerConfig Conv1DLayer::config() const {
  return {"conv1d",
          {{"filters", str(n_filters_)},
           {"kernel", str(kernel_)},
           {"channels", str(channels_)}}};
}

Shape Conv1DLayer::output_shape(const Shape &input) const {
  require(input.size() == 2 && input[1] == channels_,
          "conv1d: expected input (length," + str(channels_) + "), got " +
              shape_string(input));
  require(input[0] >= kernel_, "conv1d: input length " + str(input[0]) +
                                   " shorter than kernel " + str(kernel_));
  return {input[0] - kernel_ + 1, n_filters_};
}

Tensor Conv1DLayer::infer(const Tensor &x) const {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t out_len = out_shape[0];
  const std::size_t span = kernel_ * channels_;
  Tensor y(out_shape);
  auto xd = x.data();
  auto fd = filters.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < out_len; ++i) {
    // The window x[i .. i+kernel) is contiguous in row-major order.
    const double *window = xd.data() + i * channels_;
    for (std::size_t f = 0; f < n_filters_; ++f) {
      const double *w = fd.data() + f * span;
      double acc = bias[f];
      for (std::size_t j = 0; j < span; ++j)
        acc += window[j] * w[j];
      yd[i * n_filters_ + f] = acc;
    }
  }
  return y;
}

Tensor Conv1DLayer::forward(const Tensor &x) {
  Tensor y = infer(x);
  input_ = x;
  return y;
}

Tensor Conv1DLayer::backward(const Tensor &dy) {
  require_cached(input_, "conv1d");
  const Shape out_shape = output_shape(input_.shape());
  require(dy.shape() == out_shape,
          "conv1d: bad output gradient shape " + shape_string(dy.shape()));
  const std::size_t out_len = out_shape[0];
  const std::size_t span = kernel_ * channels_;
  Tensor dx(input_.shape());
  auto xd = input_.data();
  auto fd = filters.data();
  auto gd = filters_grad.data();
  auto dxd = dx.data();
  auto dyd = dy.data();
  for (std::size_t i = 0; i < out_len; ++i) {
    const double *window = xd.data() + i * channels_;
    double *dwindow = dxd.data() + i * channels_;
    for (std::size_t f = 0; f < n_filters_; ++f) {
      const double g = dyd[i * n_filters_ + f];
      bias_grad[f] += g;
      double *gw = gd.data() + f * span;
      const double *w = fd.data() + f * span;
      for (std::size_t j = 0; j < span; ++j) {
        gw[j] += g * window[j];
        dwindow[j] += g * w[j];
      }
    }
  }
  return dx;
}

std::vector<ParamRef> Conv1DLayer::parameters() {
  return {{"filters", &filters, &filters_grad}, {"bias", &bias, &bias_grad}};
}

void Conv1DLayer::initialize(RandomSource &rs) {
  glorot_fill(filters, rs, kernel_ * channels_, kernel_ * n_filters_);
  bias.fill(0.0);
}

std::unique_ptr<Layer> Conv1DLayer::clone() const {
  return std::make_unique<Conv1DLayer>(*this);
}

// ---- MaxPool1D -------------------------------------------------------------

MaxPool1DLayer::MaxPool1DLayer(std::size_t pool) : pool_(pool) {
  if (pool_ == 0)
    throw ConfigError("maxpool: pool size must be positive");
}

LayerConfig MaxPool1DLayer::config() const {
  return {"maxpool1d", {{"pool", str(pool_)}}};
}

Shape MaxPool1DLayer::output_shape(const Shape &input) const {
  require(input.size() == 1 || input.size() == 2,
          "maxpool: expected (length) or (length,channels), got " +
              shape_string(input));
  require(input[0] >= pool_, "maxpool: input length " + str(input[0]) +
                                 " shorter than pool size " + str(pool_));
  Shape out = input;
  out[0] = input[0] / pool_;
  return out;
}

Tensor MaxPool1DLayer::run(const Tensor &x,
                           std::vector<std::size_t> *argmax) const {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t channels = x.rank() == 2 ? x.dim(1) : 1;
  const std::size_t out_len = out_shape[0];
  Tensor y(out_shape);
  if (argmax)
    argmax->assign(y.size(), 0);
  auto xd = x.data();
  for (std::size_t j = 0; j < out_len; ++j)
    for (std::size_t c = 0; c < channels; ++c) {
      std::size_t best = j * pool_ * channels + c;
      for (std::size_t k = 1; k < pool_; ++k) {
        const std::size_t idx = (j * pool_ + k) * channels + c;
        if (xd[idx] > xd[best])
          best = idx;
      }
      y[j * channels + c] = xd[best];
      if (argmax)
        (*argmax)[j * channels + c] = best;
    }
  return y;
}

Tensor MaxPool1DLayer::infer(const Tensor &x) const { return run(x, nullptr); }

Tensor MaxPool1DLayer::forward(const Tensor &x) {
  Tensor y = run(x, &argmax_);
  input_shape_ = x.shape();
  return y;
}

Tensor MaxPool1DLayer::backward(const Tensor &dy) {
  if (input_shape_.empty())
    throw ShapeError("maxpool: backward called before forward");
  require(dy.shape() == output_shape(input_shape_),
          "maxpool: bad output gradient shape " + shape_string(dy.shape()));
  Tensor dx(input_shape_);
  for (std::size_t k = 0; k < dy.size(); ++k)
    dx[argmax_[k]] += dy[k];
  return dx;
}

std::unique_ptr<Layer> MaxPool1DLayer::clone() const {
  return std::make_unique<MaxPool1DLayer>(*this);
}

// ---- Activation ------------------------------------------------------------

ActivationLayer::ActivationLayer(Activation fn) : fn_(fn) {}

LayerConfig ActivationLayer::config() const {
  return {"activation", {{"fn", std::string(activation_name(fn_))}}};
}

Tensor ActivationLayer::infer(const Tensor &x) const {
  Tensor y = x;
  for (auto &v : y.data())
    v = apply(fn_, v);
  return y;
}

Tensor ActivationLayer::forward(const Tensor &x) {
  input_ = x;
  return infer(x);
}

Tensor ActivationLayer::backward(const Tensor &dy) {
  require_cached(input_, "activation");
  require(dy.shape() == input_.shape(),
          "activation: bad output gradient shape " + shape_string(dy.shape()));
  Tensor dx = dy;
  auto in = input_.data();
  auto d = dx.data();
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] *= derivative(fn_, in[k]);
  return dx;
}

std::unique_ptr<Layer> ActivationLayer::clone() const {
  return std::make_unique<ActivationLayer>(*this);
}

// ---- Flatten ---------------------------------------------------------------

LayerConfig FlattenLayer::config() const { return {"flatten", {}}; }

Shape FlattenLayer::output_shape(const Shape &input) const {
  return {shape_product(input)};
}

Tensor FlattenLayer::infer(const Tensor &x) const {
  return x.reshaped({x.size()});
}

Tensor FlattenLayer::forward(const Tensor &x) {
  input_shape_ = x.shape();
  return infer(x);
}

Tensor FlattenLayer::backward(const Tensor &dy) {
  if (input_shape_.empty())
    throw ShapeError("flatten: backward called before forward");
  return dy.reshaped(input_shape_);
}

std::unique_ptr<Layer> FlattenLayer::clone() const {
  return std::make_unique<FlattenLayer>(*this);
}

// ---- RepeatVector ----------------------------------------------------------

RepeatVectorLayer::RepeatVectorLayer(std::size_t repeats) : repeats_(repeats) {
  if (repeats_ == 0)
    throw ConfigError("repeat_vector: repeats must be positive");
}

LayerConfig RepeatVectorLayer::config() const {
  return {"repeat_vector", {{"repeats", str(repeats_)}}};
}

Shape RepeatVectorLayer::output_shape(const Shape &input) const {
  require(input.size() == 1, "repeat_vector: expected rank-1 input, got " +
                                 shape_string(input));
  return {repeats_, input[0]};
}

Tensor RepeatVectorLayer::infer(const Tensor &x) const {
  Tensor y(output_shape(x.shape()));
  const std::size_t d = x.size();
  for (std::size_t r = 0; r < repeats_; ++r)
    for (std::size_t k = 0; k < d; ++k)
      y[r * d + k] = x[k];
  return y;
}

Tensor RepeatVectorLayer::forward(const Tensor &x) { return infer(x); }

Tensor RepeatVectorLayer::backward(const Tensor &dy) {
  require(dy.rank() == 2 && dy.dim(0) == repeats_,
          "repeat_vector: bad output gradient shape " + shape_string(dy.shape()));
  return sum(dy, 0);
}

std::unique_ptr<Layer> RepeatVectorLayer::clone() const {
  return std::make_unique<RepeatVectorLayer>(*this);
}

// ---- TimeDistributedDense --------------------------------------------------

TimeDistributedDenseLayer::TimeDistributedDenseLayer(std::size_t in,
                                                     std::size_t out)
    : weights({out, in}), bias({out}), weights_grad({out, in}),
      bias_grad({out}), in_(in), out_(out) {}

LayerConfig TimeDistributedDenseLayer::config() const {
  return {"time_distributed_dense", {{"in", str(in_)}, {"out", str(out_)}}};
}

Shape TimeDistributedDenseLayer::output_shape(const Shape &input) const {
  require(input.size() == 2 && input[1] == in_,
          "time_distributed_dense: expected (T," + str(in_) + "), got " +
              shape_string(input));
  return {input[0], out_};
}

Tensor TimeDistributedDenseLayer::infer(const Tensor &x) const {
  Tensor y(output_shape(x.shape()));
  const std::size_t steps = x.dim(0);
  for (std::size_t t = 0; t < steps; ++t) {
    double *row = y.data().data() + t * out_;
    for (std::size_t k = 0; k < out_; ++k)
      row[k] = bias[k];
    kernels::matvec_add(weights.data(), out_, in_, x.data().data() + t * in_,
                        row);
  }
  return y;
}

Tensor TimeDistributedDenseLayer::forward(const Tensor &x) {
  Tensor y = infer(x);
  input_ = x;
  return y;
}

Tensor TimeDistributedDenseLayer::backward(const Tensor &dy) {
  require_cached(input_, "time_distributed_dense");
  require(dy.shape() == output_shape(input_.shape()),
          "time_distributed_dense: bad output gradient shape " +
              shape_string(dy.shape()));
  const std::size_t steps = input_.dim(0);
  Tensor dx(input_.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    const double *g = dy.data().data() + t * out_;
    kernels::outer_add(weights_grad.data(), out_, in_, g,
                       input_.data().data() + t * in_);
    for (std::size_t k = 0; k < out_; ++k)
      bias_grad[k] += g[k];
    kernels::matvec_t_add(weights.data(), out_, in_, g,
                          dx.data().data() + t * in_);
  }
  return dx;
}

std::vector<ParamRef> TimeDistributedDenseLayer::parameters() {
  return {{"weights", &weights, &weights_grad}, {"bias", &bias, &bias_grad}};
}

void TimeDistributedDenseLayer::initialize(RandomSource &rs) {
  glorot_fill(weights, rs, in_, out_);
  bias.fill(0.0);
}

std::unique_ptr<Layer> TimeDistributedDenseLayer::clone() const {
  return std::make_unique<TimeDistributedDenseLayer>(*this);
}

// ---- factory ---------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerConfig &c) {
  auto positive = [&](const std::string &key) {
    const long v = c.get_int(key);
    if (v <= 0)
      throw ConfigError(c.kind + ": " + key + " must be positive");
    return static_cast<std::size_t>(v);
  };
  if (c.kind == "dense")
    return std::make_unique<DenseLayer>(positive("in"), positive("out"));
  if (c.kind == "conv1d")
    return std::make_unique<Conv1DLayer>(positive("filters"), positive("kernel"),
                                         positive("channels"));
  if (c.kind == "maxpool1d")
    return std::make_unique<MaxPool1DLayer>(positive("pool"));
  if (c.kind == "activation")
    return std::make_unique<ActivationLayer>(parse_activation(c.get("fn")));
  if (c.kind == "flatten")
    return std::make_unique<FlattenLayer>();
  if (c.kind == "repeat_vector")
    return std::make_unique<RepeatVectorLayer>(positive("repeats"));
  if (c.kind == "time_distributed_dense")
    return std::make_unique<TimeDistributedDenseLayer>(positive("in"),
                                                       positive("out"));
  if (c.kind == "lstm") {
    const auto &seq = c.get("return_sequences");
    if (seq != "0" && seq != "1")
      throw ConfigError("lstm: return_sequences must be 0 or 1");
    return std::make_unique<LSTMLayer>(positive("input"), positive("hidden"),
                                       seq == "1");
  }
  throw ConfigError("unknown layer kind '" + c.kind + "'");
}

} // namespace granum::nn

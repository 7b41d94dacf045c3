// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "granum/nn/activations.hpp"
#include "granum/nn/layer.hpp"

namespace granum::nn {

/// y = W x + b on a rank-1 input. W is (out x in).
class DenseLayer final : public Layer {
public:
  DenseLayer(std::size_t in, std::size_t out);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::vector<ParamRef> parameters() override;
  void initialize(RandomSource &rs) override;
  std::unique_ptr<Layer> clone() const override;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

  Tensor weights, bias;
  Tensor weights_grad, bias_grad;

private:
  std::size_t in_, out_;
  Tensor input_;
};

/// Valid, stride-1 cross-correlation over a (length x channels) input.
/// filters is (n_filters x kernel x channels); output is
/// (length - kernel + 1) x n_filters.
class Conv1DLayer final : public Layer {
public:
  Conv1DLayer(std::size_t n_filters, std::size_t kernel, std::size_t channels);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::vector<ParamRef> parameters() override;
  void initialize(RandomSource &rs) override;
  std::unique_ptr<Layer> clone() const override;

  std::size_t n_filters() const { return n_filters_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t channels() const { return channels_; }

  Tensor filters, bias;
  Tensor filters_grad, bias_grad;

private:
  std::size_t n_filters_, kernel_, channels_;
  Tensor input_;
};

/// Non-overlapping max pooling along the first axis (stride = pool size).
/// Accepts (length) or (length x channels); trailing elements that do not
/// fill a window are dropped. Ties go to the lowest index.
class MaxPool1DLayer final : public Layer {
public:
  explicit MaxPool1DLayer(std::size_t pool = 2);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::unique_ptr<Layer> clone() const override;

  std::size_t pool() const { return pool_; }

private:
  Tensor run(const Tensor &x, std::vector<std::size_t> *argmax) const;

  std::size_t pool_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// Elementwise activation as its own layer.
class ActivationLayer final : public Layer {
public:
  explicit ActivationLayer(Activation fn);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override { return input; }
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::unique_ptr<Layer> clone() const override;

  Activation function() const { return fn_; }

private:
  Activation fn_;
  Tensor input_;
};

class FlattenLayer final : public Layer {
public:
  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::unique_ptr<Layer> clone() const override;

private:
  Shape input_shape_;
};

/// (d) -> (repeats x d), every row a copy of the input.
class RepeatVectorLayer final : public Layer {
public:
  explicit RepeatVectorLayer(std::size_t repeats = 5);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::unique_ptr<Layer> clone() const override;

  std::size_t repeats() const { return repeats_; }

private:
  std::size_t repeats_;
};

/// One dense map shared across timesteps: (T x in) -> (T x out).
class TimeDistributedDenseLayer final : public Layer {
public:
  TimeDistributedDenseLayer(std::size_t in, std::size_t out);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::vector<ParamRef> parameters() override;
  void initialize(RandomSource &rs) override;
  std::unique_ptr<Layer> clone() const override;

  Tensor weights, bias;
  Tensor weights_grad, bias_grad;

private:
  std::size_t in_, out_;
  Tensor input_;
};

/// Gate index order used for every per-gate array below.
enum Gate : std::size_t { Forget = 0, Input = 1, Output = 2, Candidate = 3 };
inline constexpr std::size_t kGateCount = 4;

/// Activations of one LSTM cell step.
struct LstmStep {
  std::vector<double> f, i, o, g; // g is the candidate c~
  std::vector<double> c, h;
};

/// Standard LSTM without peepholes:
///   f = sig(W_f x + U_f h + b_f)   i = sig(W_i x + U_i h + b_i)
///   o = sig(W_o x + U_o h + b_o)   g = tanh(W_c x + U_c h + b_c)
///   c' = f*c + i*g                 h' = o*tanh(c')
/// Input is (T x input_size); output is the last h (hidden) or the whole
/// sequence (T x hidden). Initial state h0 = c0 = 0.
class LSTMLayer final : public Layer {
public:
  LSTMLayer(std::size_t input_size, std::size_t hidden, bool return_sequences,
            double forget_bias = 0.0);

  LayerConfig config() const override;
  Shape output_shape(const Shape &input) const override;
  Tensor forward(const Tensor &x) override;
  Tensor infer(const Tensor &x) const override;
  Tensor backward(const Tensor &dy) override;
  std::vector<ParamRef> parameters() override;
  void initialize(RandomSource &rs) override;
  std::unique_ptr<Layer> clone() const override;

  std::size_t input_size() const { return input_size_; }
  std::size_t hidden() const { return hidden_; }
  bool return_sequences() const { return return_sequences_; }

  /// One cell step; x, h_prev, c_prev given as flat spans.
  LstmStep step(std::span<const double> x, std::span<const double> h_prev,
                std::span<const double> c_prev) const;

  Tensor W[kGateCount]; // hidden x input
  Tensor U[kGateCount]; // hidden x hidden
  Tensor b[kGateCount]; // hidden
  Tensor dW[kGateCount], dU[kGateCount], db[kGateCount];

private:
  Tensor run(const Tensor &x, std::vector<LstmStep> *trace) const;

  std::size_t input_size_, hidden_;
  bool return_sequences_;
  double forget_bias_;
  Tensor input_;
  std::vector<LstmStep> trace_;
};

/// Free-function form of a single cell step.
LstmStep lstm_cell_step(const LSTMLayer &layer, const Tensor &x_t,
                        const Tensor &h_prev, const Tensor &c_prev);

} // namespace granum::nn

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "granum/error.hpp"
#include "granum/nn/layers.hpp"
#include "kernels.hpp"

namespace granum::nn {

namespace {

constexpr const char *kGateSuffix[kGateCount] = {"f", "i", "o", "c"};

} // namespace

LSTMLayer::LSTMLayer(std::size_t input_size, std::size_t hidden,
                     bool return_sequences, double forget_bias)
    : input_size_(input_size), hidden_(hidden),
      return_sequences_(return_sequences), forget_bias_(forget_bias) {
  for (std::size_t g = 0; g < kGateCount; ++g) {
    W[g] = dW[g] = Tensor({hidden, input_size});
    U[g] = dU[g] = Tensor({hidden, hidden});
    b[g] = db[g] = Tensor({hidden});
  }
}

LayerConfig LSTMLayer::config() const {
  return {"lstm",
          {{"input", std::to_string(input_size_)},
           {"hidden", std::to_string(hidden_)},
           {"return_sequences", return_sequences_ ? "1" : "0"}}};
}

Shape LSTMLayer::output_shape(const Shape &input) const {
  if (input.size() != 2 || input[1] != input_size_)
    throw ShapeError("lstm: expected input (T," + std::to_string(input_size_) +
                     "), got " + shape_string(input));
  if (return_sequences_)
    return {input[0], hidden_};
  return {hidden_};
}

LstmStep LSTMLayer::step(std::span<const double> x,
                         std::span<const double> h_prev,
                         std::span<const double> c_prev) const {
  if (x.size() != input_size_ || h_prev.size() != hidden_ ||
      c_prev.size() != hidden_)
    throw ShapeError("lstm step: x/h/c sizes do not match layer dimensions");
  const std::size_t H = hidden_;
  std::vector<double> pre[kGateCount];
  for (std::size_t g = 0; g < kGateCount; ++g) {
    pre[g].assign(b[g].data().begin(), b[g].data().end());
    kernels::matvec_add(W[g].data(), H, input_size_, x.data(), pre[g].data());
    kernels::matvec_add(U[g].data(), H, H, h_prev.data(), pre[g].data());
  }
  LstmStep s;
  s.f.resize(H);
  s.i.resize(H);
  s.o.resize(H);
  s.g.resize(H);
  s.c.resize(H);
  s.h.resize(H);
  for (std::size_t k = 0; k < H; ++k) {
    s.f[k] = sigmoid(pre[Forget][k]);
    s.i[k] = sigmoid(pre[Input][k]);
    s.o[k] = sigmoid(pre[Output][k]);
    s.g[k] = std::tanh(pre[Candidate][k]);
    s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
    s.h[k] = s.o[k] * std::tanh(s.c[k]);
  }
  return s;
}

Tensor LSTMLayer::run(const Tensor &x, std::vector<LstmStep> *trace) const {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t T = x.dim(0);
  if (T == 0)
    throw ShapeError("lstm: empty sequence");
  Tensor y(out_shape);
  std::vector<double> h(hidden_, 0.0), c(hidden_, 0.0);
  if (trace) {
    trace->clear();
    trace->reserve(T);
  }
  for (std::size_t t = 0; t < T; ++t) {
    LstmStep s = step(x.data().subspan(t * input_size_, input_size_), h, c);
    h = s.h;
    c = s.c;
    if (return_sequences_)
      std::copy(h.begin(), h.end(), y.data().begin() + t * hidden_);
    if (trace)
      trace->push_back(std::move(s));
  }
  if (!return_sequences_)
    std::copy(h.begin(), h.end(), y.data().begin());
  return y;
}

Tensor LSTMLayer::infer(const Tensor &x) const { return run(x, nullptr); }

Tensor LSTMLayer::forward(const Tensor &x) {
  Tensor y = run(x, &trace_);
  input_ = x;
  return y;
}

Tensor LSTMLayer::backward(const Tensor &dy) {
  if (input_.empty())
    throw ShapeError("lstm: backward called before forward");
  if (dy.shape() != output_shape(input_.shape()))
    throw ShapeError("lstm: bad output gradient shape " +
                     shape_string(dy.shape()));
  const std::size_t T = input_.dim(0);
  const std::size_t H = hidden_, I = input_size_;
  Tensor dx(input_.shape());
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);
  std::vector<double> da[kGateCount];
  for (auto &v : da)
    v.assign(H, 0.0);
  const std::vector<double> zeros(H, 0.0);

  for (std::size_t t = T; t-- > 0;) {
    const LstmStep &s = trace_[t];
    const std::vector<double> &c_prev = t > 0 ? trace_[t - 1].c : zeros;
    const std::vector<double> &h_prev = t > 0 ? trace_[t - 1].h : zeros;
    for (std::size_t k = 0; k < H; ++k) {
      double dh = dh_next[k];
      if (return_sequences_)
        dh += dy[t * H + k];
      else if (t == T - 1)
        dh += dy[k];
      const double tc = std::tanh(s.c[k]);
      const double dc = dc_next[k] + dh * s.o[k] * (1.0 - tc * tc);
      da[Output][k] = dh * tc * s.o[k] * (1.0 - s.o[k]);
      da[Forget][k] = dc * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      da[Input][k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
      da[Candidate][k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
      dc_next[k] = dc * s.f[k];
    }
    const double *x_t = input_.data().data() + t * I;
    double *dx_t = dx.data().data() + t * I;
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t g = 0; g < kGateCount; ++g) {
      kernels::outer_add(dW[g].data(), H, I, da[g].data(), x_t);
      kernels::outer_add(dU[g].data(), H, H, da[g].data(), h_prev.data());
      for (std::size_t k = 0; k < H; ++k)
        db[g][k] += da[g][k];
      kernels::matvec_t_add(W[g].data(), H, I, da[g].data(), dx_t);
      kernels::matvec_t_add(U[g].data(), H, H, da[g].data(), dh_next.data());
    }
  }
  return dx;
}

std::vector<ParamRef> LSTMLayer::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t g = 0; g < kGateCount; ++g)
    out.push_back({std::string("W_") + kGateSuffix[g], &W[g], &dW[g]});
  for (std::size_t g = 0; g < kGateCount; ++g)
    out.push_back({std::string("U_") + kGateSuffix[g], &U[g], &dU[g]});
  for (std::size_t g = 0; g < kGateCount; ++g)
    out.push_back({std::string("b_") + kGateSuffix[g], &b[g], &db[g]});
  return out;
}

void LSTMLayer::initialize(RandomSource &rs) {
  for (std::size_t g = 0; g < kGateCount; ++g) {
    glorot_fill(W[g], rs, input_size_, hidden_);
    glorot_fill(U[g], rs, hidden_, hidden_);
    b[g].fill(g == Forget ? forget_bias_ : 0.0);
  }
}

std::unique_ptr<Layer> LSTMLayer::clone() const {
  return std::make_unique<LSTMLayer>(*this);
}

LstmStep lstm_cell_step(const LSTMLayer &layer, const Tensor &x_t,
                        const Tensor &h_prev, const Tensor &c_prev) {
  return layer.step(x_t.data(), h_prev.data(), c_prev.data());
}

} // namespace granum::nn

// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/adam.hpp"

#include <cmath>

#include "granum/error.hpp"

namespace granum::nn {

void Adam::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    for (const auto &p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }
  if (m_.size() != params.size())
    throw ShapeError("adam: parameter count changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (params[k].value->shape() != m_[k].shape() ||
        params[k].grad->shape() != m_[k].shape())
      throw ShapeError("adam: shape mismatch for parameter " + params[k].name);

  ++t_;
  const auto &c = config_;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k].value->data();
    auto g = params[k].grad->data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

} // namespace granum::nn

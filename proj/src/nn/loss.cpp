// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/loss.hpp"

#include "granum/error.hpp"

namespace granum::nn {

LossValue mse_loss(const Tensor &pred, const Tensor &target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: prediction " + shape_string(pred.shape()) +
                     " vs target " + shape_string(target.shape()));
  const double n = static_cast<double>(pred.size());
  LossValue out{0.0, Tensor(pred.shape())};
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double diff = pred[k] - target[k];
    out.value += diff * diff;
    out.gradient[k] = 2.0 * diff / n;
  }
  out.value /= n;
  return out;
}

} // namespace granum::nn

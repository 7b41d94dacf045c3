// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "granum/tensor.hpp"

namespace granum::nn {

struct LossValue {
  double value;
  Tensor gradient; // d loss / d pred
};

/// Mean squared error (1/n) sum (pred - target)^2 and its gradient
/// (2/n)(pred - target).
LossValue mse_loss(const Tensor &pred, const Tensor &target);

} // namespace granum::nn

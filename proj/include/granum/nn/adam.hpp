// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "granum/nn/layer.hpp"

namespace granum::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are created lazily on
/// the first step and must keep matching the parameter shapes afterwards.
class Adam {
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamRef> params);

  const AdamConfig &config() const noexcept { return config_; }
  std::int64_t steps() const noexcept { return t_; }
  const std::vector<Tensor> &first_moments() const noexcept { return m_; }
  const std::vector<Tensor> &second_moments() const noexcept { return v_; }

private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

} // namespace granum::nn

// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/grad_check.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "granum/error.hpp"
#include "granum/nn/loss.hpp"

namespace granum::nn {

GradCheckReport grad_check(Network &net, const Tensor &input,
                           const Tensor &target,
                           const GradCheckOptions &options) {
  if (!(options.step > 0.0))
    throw ConfigError("grad_check: step must be positive");

  net.zero_grad();
  const Tensor pred = net.forward(input);
  net.backward(mse_loss(pred, target).gradient);

  auto loss_at = [&] { return mse_loss(net.predict(input), target).value; };

  RandomSource picker(options.seed);
  GradCheckReport report;
  report.tolerance = options.tolerance;

  // Layer index for each parameter, for the report.
  std::vector<std::pair<std::size_t, std::string>> owners;
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    for (std::size_t k = net.layer(l).parameters().size(); k > 0; --k)
      owners.emplace_back(l, net.layer(l).config().kind);

  const auto params = net.parameters();
  std::array<double, 3> layer_sums{}; // diff^2, analytic^2, numeric^2
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamRef &p = params[k];
    const std::size_t n = p.value->size();
    std::vector<std::size_t> entries(n);
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_param > 0 &&
        options.max_entries_per_param < n) {
      // Partial Fisher-Yates: the first m slots become a uniform sample.
      const std::size_t m = options.max_entries_per_param;
      for (std::size_t j = 0; j < m; ++j)
        std::swap(entries[j], entries[j + picker.below(n - j)]);
      entries.resize(m);
    }

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t e : entries) {
      double &theta = (*p.value)[e];
      const double saved = theta;
      theta = saved + options.step;
      const double plus = loss_at();
      theta = saved - options.step;
      const double minus = loss_at();
      theta = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = (*p.grad)[e];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    const double a_norm = std::sqrt(a2), n_norm = std::sqrt(n2);
    const double rel =
        std::sqrt(diff2) / std::max({a_norm, n_norm, 1e-12});
    report.params.push_back({owners[k].first, owners[k].second, p.name,
                             entries.size(), rel, a_norm, n_norm});
    report.max_tensor_error = std::max(report.max_tensor_error, rel);

    if (report.layers.empty() || report.layers.back().layer != owners[k].first) {
      report.layers.push_back({owners[k].first, owners[k].second, 0.0});
      layer_sums = {0.0, 0.0, 0.0};
    }
    layer_sums[0] += diff2;
    layer_sums[1] += a2;
    layer_sums[2] += n2;
    report.layers.back().relative_error =
        std::sqrt(layer_sums[0]) /
        std::max({std::sqrt(layer_sums[1]), std::sqrt(layer_sums[2]), 1e-12});
  }
  for (const auto &l : report.layers)
    report.max_relative_error = std::max(report.max_relative_error, l.relative_error);
  return report;
}

} // namespace granum::nn

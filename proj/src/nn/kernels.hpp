// SPDX-License-Identifier: Apache-2.0
// Row-major dense kernels shared by the layers.
#pragma once

#include <cstddef>
#include <span>

namespace granum::nn::kernels {

// out[r] += sum_c m[r, c] * x[c]; m is rows x cols.
inline void matvec_add(std::span<const double> m, std::size_t rows,
                       std::size_t cols, const double *x, double *out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double *row = m.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
      acc += row[c] * x[c];
    out[r] += acc;
  }
}

// out[c] += sum_r m[r, c] * y[r]
inline void matvec_t_add(std::span<const double> m, std::size_t rows,
                         std::size_t cols, const double *y, double *out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double *row = m.data() + r * cols;
    const double yr = y[r];
    if (yr == 0.0)
      continue;
    for (std::size_t c = 0; c < cols; ++c)
      out[c] += row[c] * yr;
  }
}

// g[r, c] += y[r] * x[c]
inline void outer_add(std::span<double> g, std::size_t rows, std::size_t cols,
                      const double *y, const double *x) {
  for (std::size_t r = 0; r < rows; ++r) {
    double *row = g.data() + r * cols;
    const double yr = y[r];
    if (yr == 0.0)
      continue;
    for (std::size_t c = 0; c < cols; ++c)
      row[c] += yr * x[c];
  }
}

} // namespace granum::nn::kernels

// SPDX-License-Identifier: Apache-2.0
#include "granum/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "granum/error.hpp"

namespace granum {

std::size_t shape_product(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace {

void check_shape(const Shape &shape) {
  if (shape.empty())
    throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0)
      throw ShapeError("zero dimension in shape " + shape_string(shape));
}

void require_same_shape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

} // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_))
    throw ShapeError("value count " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0)
    throw ShapeError("matrix needs at least one row");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto &row : rows) {
    if (row.size() != cols)
      throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape_));
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_product(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) +
                     " by " + shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      for (std::size_t j = 0; j < n; ++j)
        o[i * n + j] += aip * bd[p * n + j];
    }
  return out;
}

Tensor matmul_transposed_a(const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError("matmul_transposed_a: cannot multiply transpose of " +
                     shape_string(a.shape()) + " by " + shape_string(b.shape()));
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ad[p * m + i];
      for (std::size_t j = 0; j < n; ++j)
        o[i * n + j] += api * bd[p * n + j];
    }
  return out;
}

Tensor ew_map(const Tensor &t, const std::function<double(double)> &f) {
  Tensor out = t;
  for (auto &v : out.data())
    v = f(v);
  return out;
}

Tensor ew_zip(const Tensor &a, const Tensor &b,
              const std::function<double(double, double)> &f) {
  require_same_shape(a, b, "ew_zip");
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = f(o[i], bd[i]);
  return out;
}

void add_inplace(Tensor &a, const Tensor &b) {
  require_same_shape(a, b, "add_inplace");
  auto o = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] += bd[i];
}

void scale_inplace(Tensor &a, double factor) {
  for (auto &v : a.data())
    v *= factor;
}

double sum(const Tensor &t) {
  double s = 0.0;
  for (double v : t.data())
    s += v;
  return s;
}

double mean(const Tensor &t) {
  if (t.empty())
    throw ShapeError("mean of an empty tensor");
  return sum(t) / static_cast<double>(t.size());
}

Tensor sum(const Tensor &t, std::size_t axis) {
  if (axis >= t.rank())
    throw ShapeError("sum: axis " + std::to_string(axis) + " out of range for " +
                     shape_string(t.shape()));
  Shape out_shape = t.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty())
    out_shape.push_back(1);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i)
    outer *= t.shape()[i];
  for (std::size_t i = axis + 1; i < t.rank(); ++i)
    inner *= t.shape()[i];
  const std::size_t len = t.shape()[axis];
  Tensor out(out_shape);
  auto o = out.data();
  auto d = t.data();
  for (std::size_t a = 0; a < outer; ++a)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t b = 0; b < inner; ++b)
        o[a * inner + b] += d[(a * len + l) * inner + b];
  return out;
}

Tensor mean(const Tensor &t, std::size_t axis) {
  Tensor out = sum(t, axis);
  scale_inplace(out, 1.0 / static_cast<double>(t.shape()[axis]));
  return out;
}

MaxWithIndex max_with_index(std::span<const double> values) {
  if (values.empty())
    throw ShapeError("max_with_index of an empty range");
  MaxWithIndex best{values[0], 0};
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > best.value)
      best = {values[i], i};
  return best;
}

MaxWithIndex max_with_index(const Tensor &t) { return max_with_index(t.data()); }

} // namespace granum

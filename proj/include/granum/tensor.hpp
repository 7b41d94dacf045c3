// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace granum {

using Shape = std::vector<std::size_t>;

/// Dense row-major f64 array tagged with its shape.
///
/// The last dimension is contiguous. For a 2-D tensor of shape (rows, cols)
/// element (r, c) lives at data()[r * cols + c]. This layout is also the
/// on-disk order of serialized weights.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double> &values() const noexcept { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }

  /// Same values, new shape of equal element count.
  Tensor reshaped(Shape shape) const;
  /// Sets every entry to zero, keeping the shape.
  void fill(double value);

  bool operator==(const Tensor &) const = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Shape &shape);
std::size_t shape_product(const Shape &shape);

Tensor matmul(const Tensor &a, const Tensor &b);
/// a^T * b without materialising the transpose.
Tensor matmul_transposed_a(const Tensor &a, const Tensor &b);

Tensor ew_map(const Tensor &t, const std::function<double(double)> &f);
Tensor ew_zip(const Tensor &a, const Tensor &b,
              const std::function<double(double, double)> &f);

/// In-place a += b; shapes must match.
void add_inplace(Tensor &a, const Tensor &b);
void scale_inplace(Tensor &a, double factor);

double sum(const Tensor &t);
double mean(const Tensor &t);
/// Reduces one axis of a tensor, dropping it from the shape.
Tensor sum(const Tensor &t, std::size_t axis);
Tensor mean(const Tensor &t, std::size_t axis);

struct MaxWithIndex {
  double value;
  std::size_t index;
};
/// Maximum over all entries; the lowest flat index wins ties.
MaxWithIndex max_with_index(const Tensor &t);
MaxWithIndex max_with_index(std::span<const double> values);

} // namespace granum

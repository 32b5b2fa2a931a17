#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace afford::num {

// Dense row-major 64-bit tensor. Shape extents are positive; data length
// equals the product of the extents. All stored values are expected finite;
// graph ops verify this and raise afford::Error on violation.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::vector<double> v);     // shape [1, n]
  static Tensor column(std::vector<double> v);  // shape [n, 1]

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t rows() const;  // first extent of a 2-d tensor
  std::size_t cols() const;  // second extent of a 2-d tensor

  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

}  // namespace afford::num

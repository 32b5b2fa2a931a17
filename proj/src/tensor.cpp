#include "afford/tensor.hpp"

#include <cmath>
#include <sstream>

#include "afford/error.hpp"

namespace afford::num {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  require(!shape.empty(), "tensor: empty shape");
  for (std::size_t e : shape) require(e > 0, "tensor: zero extent");
  data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  require(!shape.empty(), "tensor: empty shape");
  for (std::size_t e : shape) require(e > 0, "tensor: zero extent");
  require(data.size() == shape_numel(shape), "tensor: data length does not match shape");
}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

std::size_t Tensor::rows() const {
  require(ndim() == 2, "tensor: rows() on non-matrix " + shape_str());
  return shape[0];
}

std::size_t Tensor::cols() const {
  require(ndim() == 2, "tensor: cols() on non-matrix " + shape_str());
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

}  // namespace afford::num

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "afford/kernels.hpp"
#include "afford/params.hpp"
#include "afford/tensor.hpp"

namespace afford::num {

using ValueId = std::int32_t;

// Reverse-mode autodiff over a single-use tape. Ops record their inputs and
// forward values in execution order; backward() walks the tape in reverse and
// returns the gradient of a scalar output with respect to every parameter
// leaf. Every op checks shapes up front and verifies its output is finite.
//
// No broadcasting, with two documented exceptions: add_row_bias broadcasts a
// bias vector over matrix rows, and repeat_rows/repeat_cols are explicit
// expansion ops.
class Tape {
 public:
  explicit Tape(const ParameterStore* params = nullptr) : params_(params) {}

  ValueId constant(Tensor t);
  ValueId parameter(const std::string& name);  // copies the current store value

  ValueId matmul(ValueId a, ValueId b);
  ValueId add_row_bias(ValueId x, ValueId bias);  // [m,n] + [n]
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId div(ValueId a, ValueId b);
  ValueId affine(ValueId x, double scale, double shift);
  ValueId relu(ValueId x);
  ValueId softplus(ValueId x);  // strictly positive for all finite inputs
  ValueId log(ValueId x);
  ValueId square(ValueId x);
  ValueId concat_cols(ValueId a, ValueId b);
  ValueId slice_cols(ValueId x, std::size_t begin, std::size_t end);
  ValueId repeat_rows(ValueId x, std::size_t n);  // [1,d] -> [n,d]
  ValueId repeat_cols(ValueId x, std::size_t n);  // [m,1] -> [m,n]
  ValueId mean_rows(ValueId x);                   // [m,d] -> [1,d]
  ValueId sum_all(ValueId x);                     // -> [1]
  ValueId mean_all(ValueId x);                    // -> [1]
  ValueId reshape(ValueId x, std::vector<std::size_t> shape);
  // x [C,H,W], kernel [F,C,kh,kw], bias [F]
  ValueId conv2d(ValueId x, ValueId kernel, ValueId bias, std::size_t stride, std::size_t pad);
  // x [C,H,W], kernel [C,F,kh,kw], bias [F]
  ValueId deconv2d(ValueId x, ValueId kernel, ValueId bias, std::size_t stride, std::size_t pad);

  const Tensor& value(ValueId id) const;
  double scalar(ValueId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Single use: gradients of a scalar node w.r.t. all parameter leaves.
  GradientMap backward(ValueId loss);

 private:
  enum class Op : std::uint8_t {
    Constant, Parameter, MatMul, AddRowBias, Add, Sub, Mul, Div, Affine, Relu,
    Softplus, Log, Square, ConcatCols, SliceCols, RepeatRows, RepeatCols,
    MeanRows, SumAll, MeanAll, Reshape, Conv2d, Deconv2d,
  };

  struct Node {
    Op op;
    std::array<ValueId, 3> in{-1, -1, -1};
    Tensor value;
    double a = 0.0, b = 0.0;       // affine coefficients
    std::size_t i0 = 0, i1 = 0;    // slice bounds / repeat count
    Conv2dDims conv{};             // conv geometry
    std::string param_name;
  };

  ValueId push(Node n, const char* opname);
  const Tensor& val(ValueId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  static const char* op_name(Op op);

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace afford::num

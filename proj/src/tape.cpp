#include "afford/tape.hpp"

#include <cfloat>
#include <cmath>

#include "afford/error.hpp"

namespace afford::num {

Tensor& ParameterStore::add(const std::string& name, Tensor init) {
  require(!contains(name), "parameter already defined: " + name);
  order_.push_back(name);
  return values_.emplace(name, std::move(init)).first->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = values_.find(name);
  require(it != values_.end(), "unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = values_.find(name);
  require(it != values_.end(), "unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += at(name).numel();
  return n;
}

namespace {

double stable_softplus(double x) {
  // max(x,0) + log1p(exp(-|x|)), clamped away from zero so the output stays
  // strictly positive even when exp() underflows.
  const double v = (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
  return v < DBL_MIN ? DBL_MIN : v;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Parameter: return "parameter";
    case Op::MatMul: return "matmul";
    case Op::AddRowBias: return "add_row_bias";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Affine: return "affine";
    case Op::Relu: return "relu";
    case Op::Softplus: return "softplus";
    case Op::Log: return "log";
    case Op::Square: return "square";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::RepeatRows: return "repeat_rows";
    case Op::RepeatCols: return "repeat_cols";
    case Op::MeanRows: return "mean_rows";
    case Op::SumAll: return "sum_all";
    case Op::MeanAll: return "mean_all";
    case Op::Reshape: return "reshape";
    case Op::Conv2d: return "conv2d";
    case Op::Deconv2d: return "deconv2d";
  }
  return "?";
}

ValueId Tape::push(Node n, const char* opname) {
  require(n.value.all_finite(), std::string("non-finite value produced by ") + opname);
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

const Tensor& Tape::value(ValueId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < nodes_.size(), "tape: bad value id");
  return nodes_[static_cast<std::size_t>(id)].value;
}

double Tape::scalar(ValueId id) const {
  const Tensor& t = value(id);
  require(t.numel() == 1, "tape: scalar() on non-scalar " + t.shape_str());
  return t.data[0];
}

ValueId Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(t);
  return push(std::move(n), "constant");
}

ValueId Tape::parameter(const std::string& name) {
  require(params_ != nullptr, "tape has no parameter store");
  Node n;
  n.op = Op::Parameter;
  n.value = params_->at(name);
  n.param_name = name;
  return push(std::move(n), "parameter");
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.ndim() == 2 && B.ndim() == 2 && A.cols() == B.rows(),
          "matmul: shape mismatch " + A.shape_str() + " x " + B.shape_str());
  Node n;
  n.op = Op::MatMul;
  n.in = {a, b, -1};
  n.value = Tensor({A.rows(), B.cols()});
  kern::matmul(A.data.data(), B.data.data(), n.value.data.data(), A.rows(), A.cols(), B.cols());
  return push(std::move(n), "matmul");
}

ValueId Tape::add_row_bias(ValueId x, ValueId bias) {
  const Tensor& X = value(x);
  const Tensor& B = value(bias);
  require(X.ndim() == 2 && B.ndim() == 1 && B.shape[0] == X.cols(),
          "add_row_bias: shape mismatch " + X.shape_str() + " + " + B.shape_str());
  Node n;
  n.op = Op::AddRowBias;
  n.in = {x, bias, -1};
  n.value = X;
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) n.value.data[i * X.cols() + j] += B.data[j];
  return push(std::move(n), "add_row_bias");
}

#define AFFORD_BINOP(NAME, OP, EXPR)                                              \
  ValueId Tape::NAME(ValueId a, ValueId b) {                                      \
    const Tensor& A = value(a);                                                   \
    const Tensor& B = value(b);                                                   \
    require(A.same_shape(B), #NAME ": shape mismatch " + A.shape_str() + " vs " + \
                                 B.shape_str());                                  \
    Node n;                                                                       \
    n.op = Op::OP;                                                                \
    n.in = {a, b, -1};                                                            \
    n.value = Tensor(A.shape);                                                    \
    for (std::size_t i = 0; i < A.numel(); ++i) {                                 \
      const double x = A.data[i], y = B.data[i];                                  \
      n.value.data[i] = (EXPR);                                                   \
    }                                                                             \
    return push(std::move(n), #NAME);                                             \
  }

AFFORD_BINOP(add, Add, x + y)
AFFORD_BINOP(sub, Sub, x - y)
AFFORD_BINOP(mul, Mul, x* y)
AFFORD_BINOP(div, Div, x / y)
#undef AFFORD_BINOP

#define AFFORD_UNOP(NAME, OP, EXPR)                 \
  ValueId Tape::NAME(ValueId x) {                   \
    const Tensor& X = value(x);                     \
    Node n;                                         \
    n.op = Op::OP;                                  \
    n.in = {x, -1, -1};                             \
    n.value = Tensor(X.shape);                      \
    for (std::size_t i = 0; i < X.numel(); ++i) {   \
      const double v = X.data[i];                   \
      n.value.data[i] = (EXPR);                     \
    }                                               \
    return push(std::move(n), #NAME);               \
  }

AFFORD_UNOP(relu, Relu, v > 0.0 ? v : 0.0)
AFFORD_UNOP(softplus, Softplus, stable_softplus(v))
AFFORD_UNOP(log, Log, std::log(v))
AFFORD_UNOP(square, Square, v* v)
#undef AFFORD_UNOP

ValueId Tape::affine(ValueId x, double scale, double shift) {
  const Tensor& X = value(x);
  Node n;
  n.op = Op::Affine;
  n.in = {x, -1, -1};
  n.a = scale;
  n.b = shift;
  n.value = Tensor(X.shape);
  for (std::size_t i = 0; i < X.numel(); ++i) n.value.data[i] = scale * X.data[i] + shift;
  return push(std::move(n), "affine");
}

ValueId Tape::concat_cols(ValueId a, ValueId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.ndim() == 2 && B.ndim() == 2 && A.rows() == B.rows(),
          "concat_cols: shape mismatch " + A.shape_str() + " | " + B.shape_str());
  Node n;
  n.op = Op::ConcatCols;
  n.in = {a, b, -1};
  n.i0 = A.cols();
  n.value = Tensor({A.rows(), A.cols() + B.cols()});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double* out = n.value.data.data() + i * (A.cols() + B.cols());
    for (std::size_t j = 0; j < A.cols(); ++j) out[j] = A.at(i, j);
    for (std::size_t j = 0; j < B.cols(); ++j) out[A.cols() + j] = B.at(i, j);
  }
  return push(std::move(n), "concat_cols");
}

ValueId Tape::slice_cols(ValueId x, std::size_t begin, std::size_t end) {
  const Tensor& X = value(x);
  require(X.ndim() == 2 && begin < end && end <= X.cols(), "slice_cols: bad range");
  Node n;
  n.op = Op::SliceCols;
  n.in = {x, -1, -1};
  n.i0 = begin;
  n.i1 = end;
  n.value = Tensor({X.rows(), end - begin});
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) n.value.at(i, j - begin) = X.at(i, j);
  return push(std::move(n), "slice_cols");
}

ValueId Tape::repeat_rows(ValueId x, std::size_t nrep) {
  const Tensor& X = value(x);
  require(X.ndim() == 2 && X.rows() == 1 && nrep >= 1, "repeat_rows: need [1,d] input");
  Node n;
  n.op = Op::RepeatRows;
  n.in = {x, -1, -1};
  n.i0 = nrep;
  n.value = Tensor({nrep, X.cols()});
  for (std::size_t i = 0; i < nrep; ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) n.value.at(i, j) = X.data[j];
  return push(std::move(n), "repeat_rows");
}

ValueId Tape::repeat_cols(ValueId x, std::size_t nrep) {
  const Tensor& X = value(x);
  require(X.ndim() == 2 && X.cols() == 1 && nrep >= 1, "repeat_cols: need [m,1] input");
  Node n;
  n.op = Op::RepeatCols;
  n.in = {x, -1, -1};
  n.i0 = nrep;
  n.value = Tensor({X.rows(), nrep});
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < nrep; ++j) n.value.at(i, j) = X.data[i];
  return push(std::move(n), "repeat_cols");
}

ValueId Tape::mean_rows(ValueId x) {
  const Tensor& X = value(x);
  require(X.ndim() == 2, "mean_rows: need matrix input");
  Node n;
  n.op = Op::MeanRows;
  n.in = {x, -1, -1};
  n.value = Tensor({1, X.cols()});
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) n.value.data[j] += X.at(i, j);
  const double inv = 1.0 / static_cast<double>(X.rows());
  for (auto& v : n.value.data) v *= inv;
  return push(std::move(n), "mean_rows");
}

ValueId Tape::sum_all(ValueId x) {
  const Tensor& X = value(x);
  Node n;
  n.op = Op::SumAll;
  n.in = {x, -1, -1};
  double acc = 0.0;
  for (double v : X.data) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n), "sum_all");
}

ValueId Tape::mean_all(ValueId x) {
  const Tensor& X = value(x);
  Node n;
  n.op = Op::MeanAll;
  n.in = {x, -1, -1};
  double acc = 0.0;
  for (double v : X.data) acc += v;
  n.value = Tensor::scalar(acc / static_cast<double>(X.numel()));
  return push(std::move(n), "mean_all");
}

ValueId Tape::reshape(ValueId x, std::vector<std::size_t> shape) {
  const Tensor& X = value(x);
  require(shape_numel(shape) == X.numel(), "reshape: element count mismatch");
  Node n;
  n.op = Op::Reshape;
  n.in = {x, -1, -1};
  n.value = Tensor(std::move(shape), X.data);
  return push(std::move(n), "reshape");
}

ValueId Tape::conv2d(ValueId x, ValueId kernel, ValueId bias, std::size_t stride, std::size_t pad) {
  const Tensor& X = value(x);
  const Tensor& K = value(kernel);
  const Tensor& B = value(bias);
  require(X.ndim() == 3 && K.ndim() == 4, "conv2d: need [C,H,W] input and [F,C,kh,kw] kernel");
  require(K.shape[1] == X.shape[0], "conv2d: channel mismatch");
  require(B.ndim() == 1 && B.shape[0] == K.shape[0], "conv2d: bias mismatch");
  Node n;
  n.op = Op::Conv2d;
  n.in = {x, kernel, bias};
  n.conv = conv2d_dims(X.shape[0], X.shape[1], X.shape[2], K.shape[0], K.shape[2], K.shape[3], stride, pad);
  n.value = Tensor({n.conv.out_ch, n.conv.out_h, n.conv.out_w});
  kern::conv2d_forward(X.data.data(), K.data.data(), B.data.data(), n.value.data.data(), n.conv);
  return push(std::move(n), "conv2d");
}

ValueId Tape::deconv2d(ValueId x, ValueId kernel, ValueId bias, std::size_t stride, std::size_t pad) {
  const Tensor& X = value(x);
  const Tensor& K = value(kernel);
  const Tensor& B = value(bias);
  require(X.ndim() == 3 && K.ndim() == 4, "deconv2d: need [C,H,W] input and [C,F,kh,kw] kernel");
  require(K.shape[0] == X.shape[0], "deconv2d: channel mismatch");
  require(B.ndim() == 1 && B.shape[0] == K.shape[1], "deconv2d: bias mismatch");
  Node n;
  n.op = Op::Deconv2d;
  n.in = {x, kernel, bias};
  n.conv = deconv2d_dims(X.shape[0], X.shape[1], X.shape[2], K.shape[1], K.shape[2], K.shape[3], stride, pad);
  n.value = Tensor({n.conv.out_ch, n.conv.out_h, n.conv.out_w});
  kern::deconv2d_forward(X.data.data(), K.data.data(), B.data.data(), n.value.data.data(), n.conv);
  return push(std::move(n), "deconv2d");
}

GradientMap Tape::backward(ValueId loss) {
  require(!consumed_, "tape already consumed by backward");
  consumed_ = true;
  const Tensor& L = value(loss);
  require(L.numel() == 1, "backward: loss must be scalar, got " + L.shape_str());

  std::vector<Tensor> grads(nodes_.size());
  auto grad_of = [&](ValueId id) -> Tensor& {
    Tensor& g = grads[static_cast<std::size_t>(id)];
    if (g.data.empty()) g = Tensor(nodes_[static_cast<std::size_t>(id)].value.shape);
    return g;
  };
  grad_of(loss).data[0] = 1.0;

  for (std::int64_t idx = loss; idx >= 0; --idx) {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    Tensor& g = grads[static_cast<std::size_t>(idx)];
    if (g.data.empty()) continue;  // node does not influence the loss

    switch (n.op) {
      case Op::Constant:
      case Op::Parameter:
        break;
      case Op::MatMul: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        Tensor da({A.rows(), A.cols()}), db({B.rows(), B.cols()});
        kern::matmul_nt(g.data.data(), B.data.data(), da.data.data(), A.rows(), B.cols(), A.cols());
        kern::matmul_tn(A.data.data(), g.data.data(), db.data.data(), A.rows(), A.cols(), B.cols());
        Tensor& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += da.data[i];
        Tensor& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += db.data[i];
        break;
      }
      case Op::AddRowBias: {
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += g.data[i];
        Tensor& gb = grad_of(n.in[1]);
        const std::size_t m = n.value.rows(), c = n.value.cols();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) gb.data[j] += g.data[i * c + j];
        break;
      }
      case Op::Add: {
        Tensor& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g.data[i];
        Tensor& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += g.data[i];
        break;
      }
      case Op::Sub: {
        Tensor& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g.data[i];
        Tensor& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] -= g.data[i];
        break;
      }
      case Op::Mul: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        Tensor& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g.data[i] * B.data[i];
        Tensor& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += g.data[i] * A.data[i];
        break;
      }
      case Op::Div: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        Tensor& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g.data[i] / B.data[i];
        Tensor& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gb.numel(); ++i)
          gb.data[i] -= g.data[i] * A.data[i] / (B.data[i] * B.data[i]);
        break;
      }
      case Op::Affine: {
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += n.a * g.data[i];
        break;
      }
      case Op::Relu: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i)
          if (X.data[i] > 0.0) gx.data[i] += g.data[i];
        break;
      }
      case Op::Softplus: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += g.data[i] * sigmoid(X.data[i]);
        break;
      }
      case Op::Log: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += g.data[i] / X.data[i];
        break;
      }
      case Op::Square: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += 2.0 * X.data[i] * g.data[i];
        break;
      }
      case Op::ConcatCols: {
        const std::size_t ac = n.i0;
        const std::size_t total = n.value.cols();
        const std::size_t m = n.value.rows();
        Tensor& ga = grad_of(n.in[0]);
        Tensor& gb = grad_of(n.in[1]);
        const std::size_t bc = total - ac;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < ac; ++j) ga.data[i * ac + j] += g.data[i * total + j];
          for (std::size_t j = 0; j < bc; ++j) gb.data[i * bc + j] += g.data[i * total + ac + j];
        }
        break;
      }
      case Op::SliceCols: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        const std::size_t w = n.i1 - n.i0;
        for (std::size_t i = 0; i < X.rows(); ++i)
          for (std::size_t j = 0; j < w; ++j) gx.data[i * X.cols() + n.i0 + j] += g.data[i * w + j];
        break;
      }
      case Op::RepeatRows: {
        Tensor& gx = grad_of(n.in[0]);
        const std::size_t c = n.value.cols();
        for (std::size_t i = 0; i < n.i0; ++i)
          for (std::size_t j = 0; j < c; ++j) gx.data[j] += g.data[i * c + j];
        break;
      }
      case Op::RepeatCols: {
        Tensor& gx = grad_of(n.in[0]);
        const std::size_t m = n.value.rows();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n.i0; ++j) gx.data[i] += g.data[i * n.i0 + j];
        break;
      }
      case Op::MeanRows: {
        const Tensor& X = val(n.in[0]);
        Tensor& gx = grad_of(n.in[0]);
        const double inv = 1.0 / static_cast<double>(X.rows());
        for (std::size_t i = 0; i < X.rows(); ++i)
          for (std::size_t j = 0; j < X.cols(); ++j) gx.data[i * X.cols() + j] += inv * g.data[j];
        break;
      }
      case Op::SumAll: {
        Tensor& gx = grad_of(n.in[0]);
        for (auto& v : gx.data) v += g.data[0];
        break;
      }
      case Op::MeanAll: {
        Tensor& gx = grad_of(n.in[0]);
        const double inv = g.data[0] / static_cast<double>(gx.numel());
        for (auto& v : gx.data) v += inv;
        break;
      }
      case Op::Reshape: {
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += g.data[i];
        break;
      }
      case Op::Conv2d: {
        const Tensor& X = val(n.in[0]);
        const Tensor& K = val(n.in[1]);
        Tensor dx(X.shape), dk(K.shape), db(val(n.in[2]).shape);
        kern::conv2d_backward_input(g.data.data(), K.data.data(), dx.data.data(), n.conv);
        kern::conv2d_backward_kernel(g.data.data(), X.data.data(), dk.data.data(), n.conv);
        kern::conv2d_backward_bias(g.data.data(), db.data.data(), n.conv);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += dx.data[i];
        Tensor& gk = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gk.numel(); ++i) gk.data[i] += dk.data[i];
        Tensor& gb = grad_of(n.in[2]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += db.data[i];
        break;
      }
      case Op::Deconv2d: {
        const Tensor& X = val(n.in[0]);
        const Tensor& K = val(n.in[1]);
        Tensor dx(X.shape), dk(K.shape), db(val(n.in[2]).shape);
        kern::deconv2d_backward_input(g.data.data(), K.data.data(), dx.data.data(), n.conv);
        kern::deconv2d_backward_kernel(g.data.data(), X.data.data(), dk.data.data(), n.conv);
        kern::deconv2d_backward_bias(g.data.data(), db.data.data(), n.conv);
        Tensor& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += dx.data[i];
        Tensor& gk = grad_of(n.in[1]);
        for (std::size_t i = 0; i < gk.numel(); ++i) gk.data[i] += dk.data[i];
        Tensor& gb = grad_of(n.in[2]);
        for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += db.data[i];
        break;
      }
    }
  }

  GradientMap out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::Parameter || grads[i].data.empty()) continue;
    auto it = out.find(n.param_name);
    if (it == out.end()) {
      out.emplace(n.param_name, std::move(grads[i]));
    } else {
      for (std::size_t j = 0; j < it->second.numel(); ++j) it->second.data[j] += grads[i].data[j];
    }
  }
  return out;
}

}  // namespace afford::num

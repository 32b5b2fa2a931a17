#pragma once

#include <cstddef>

// Dense kernels behind the graph ops. `kern` is the production set,
// OpenMP-parallel over disjoint output elements; `ref` is a naive serial
// implementation kept for testing and benchmarking. Every output element is
// accumulated in the same fixed index order in both sets, so the two are
// bitwise identical for any thread count (the parity tests assert this).
namespace afford::num {

struct Conv2dDims {
  std::size_t in_ch, in_h, in_w;
  std::size_t out_ch, kh, kw;
  std::size_t stride, pad;
  std::size_t out_h, out_w;
};

// floor((in + 2*pad - k) / stride) + 1; throws on invalid geometry.
Conv2dDims conv2d_dims(std::size_t in_ch, std::size_t in_h, std::size_t in_w,
                       std::size_t out_ch, std::size_t kh, std::size_t kw,
                       std::size_t stride, std::size_t pad);
// (in - 1)*stride - 2*pad + k; throws on invalid geometry.
Conv2dDims deconv2d_dims(std::size_t in_ch, std::size_t in_h, std::size_t in_w,
                         std::size_t out_ch, std::size_t kh, std::size_t kw,
                         std::size_t stride, std::size_t pad);

namespace kern {

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
// c[m,q] = a[m,p] * b[q,p]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t p, std::size_t q);
// c[k,n] = a[m,k]^T * b[m,n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// in [C,H,W], kernel [F,C,kh,kw], bias [F], out [F,OH,OW]
void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d);
void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d);
void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            const Conv2dDims& d);
void conv2d_backward_bias(const double* dout, double* dbias, const Conv2dDims& d);

// in [C,H,W], kernel [C,F,kh,kw], bias [F], out [F,OH,OW]
void deconv2d_forward(const double* in, const double* kernel, const double* bias,
                      double* out, const Conv2dDims& d);
void deconv2d_backward_input(const double* dout, const double* kernel, double* din,
                             const Conv2dDims& d);
void deconv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                              const Conv2dDims& d);
void deconv2d_backward_bias(const double* dout, double* dbias, const Conv2dDims& d);

}  // namespace kern

namespace ref {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t p, std::size_t q);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d);
void deconv2d_forward(const double* in, const double* kernel, const double* bias,
                      double* out, const Conv2dDims& d);

}  // namespace ref

}  // namespace afford::num

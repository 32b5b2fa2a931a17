#include "afford/kernels.hpp"

#include <cstring>

#include "afford/error.hpp"

namespace afford::num {

Conv2dDims conv2d_dims(std::size_t in_ch, std::size_t in_h, std::size_t in_w,
                       std::size_t out_ch, std::size_t kh, std::size_t kw,
                       std::size_t stride, std::size_t pad) {
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(kh >= 1 && kw >= 1, "conv2d: empty kernel");
  require(kh <= in_h + 2 * pad && kw <= in_w + 2 * pad,
          "conv2d: kernel larger than padded input");
  Conv2dDims d{in_ch, in_h, in_w, out_ch, kh, kw, stride, pad, 0, 0};
  d.out_h = (in_h + 2 * pad - kh) / stride + 1;
  d.out_w = (in_w + 2 * pad - kw) / stride + 1;
  return d;
}

Conv2dDims deconv2d_dims(std::size_t in_ch, std::size_t in_h, std::size_t in_w,
                         std::size_t out_ch, std::size_t kh, std::size_t kw,
                         std::size_t stride, std::size_t pad) {
  require(stride >= 1, "deconv2d: stride must be >= 1");
  require(kh >= 1 && kw >= 1, "deconv2d: empty kernel");
  const long long oh = static_cast<long long>((in_h - 1) * stride + kh) - 2 * static_cast<long long>(pad);
  const long long ow = static_cast<long long>((in_w - 1) * stride + kw) - 2 * static_cast<long long>(pad);
  require(oh >= 1 && ow >= 1, "deconv2d: output would be empty");
  Conv2dDims d{in_ch, in_h, in_w, out_ch, kh, kw, stride, pad,
               static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)};
  return d;
}

namespace kern {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  const long long M = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= 16384)
  for (long long i = 0; i < M; ++i) {
    double* crow = c + i * n;
    std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      const double* brow = b + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t p, std::size_t q) {
  const long long M = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * p * q >= 16384)
  for (long long i = 0; i < M; ++i) {
    const double* arow = a + i * p;
    for (std::size_t j = 0; j < q; ++j) {
      const double* brow = b + j * p;
      double acc = 0.0;
      for (std::size_t t = 0; t < p; ++t) acc += arow[t] * brow[t];
      c[i * q + j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
  const long long K = static_cast<long long>(k);
#pragma omp parallel for schedule(static) if (m * k * n >= 16384)
  for (long long i = 0; i < K; ++i) {
    double* crow = c + i * n;
    std::memset(crow, 0, n * sizeof(double));
    for (std::size_t t = 0; t < m; ++t) {
      const double av = a[t * k + i];
      const double* brow = b + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d) {
  const long long F = static_cast<long long>(d.out_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long f = 0; f < F; ++f) {
    for (std::size_t oy = 0; oy < d.out_h; ++oy) {
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t c = 0; c < d.in_ch; ++c) {
          const double* inc = in + c * d.in_h * d.in_w;
          const double* kc = kernel + ((f * d.in_ch + c) * d.kh) * d.kw;
          for (std::size_t ky = 0; ky < d.kh; ++ky) {
            const long long iy = static_cast<long long>(oy * d.stride + ky) - static_cast<long long>(d.pad);
            if (iy < 0 || iy >= static_cast<long long>(d.in_h)) continue;
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long ix = static_cast<long long>(ox * d.stride + kx) - static_cast<long long>(d.pad);
              if (ix < 0 || ix >= static_cast<long long>(d.in_w)) continue;
              acc += inc[iy * d.in_w + ix] * kc[ky * d.kw + kx];
            }
          }
        }
        out[(f * d.out_h + oy) * d.out_w + ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d) {
  const long long C = static_cast<long long>(d.in_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long c = 0; c < C; ++c) {
    for (std::size_t iy = 0; iy < d.in_h; ++iy) {
      for (std::size_t ix = 0; ix < d.in_w; ++ix) {
        double acc = 0.0;
        for (std::size_t f = 0; f < d.out_ch; ++f) {
          const double* doutf = dout + f * d.out_h * d.out_w;
          const double* kc = kernel + ((f * d.in_ch + c) * d.kh) * d.kw;
          for (std::size_t ky = 0; ky < d.kh; ++ky) {
            const long long ty = static_cast<long long>(iy + d.pad) - static_cast<long long>(ky);
            if (ty < 0 || ty % static_cast<long long>(d.stride)) continue;
            const long long oy = ty / static_cast<long long>(d.stride);
            if (oy >= static_cast<long long>(d.out_h)) continue;
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long tx = static_cast<long long>(ix + d.pad) - static_cast<long long>(kx);
              if (tx < 0 || tx % static_cast<long long>(d.stride)) continue;
              const long long ox = tx / static_cast<long long>(d.stride);
              if (ox >= static_cast<long long>(d.out_w)) continue;
              acc += doutf[oy * d.out_w + ox] * kc[ky * d.kw + kx];
            }
          }
        }
        din[(c * d.in_h + iy) * d.in_w + ix] = acc;
      }
    }
  }
}

void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            const Conv2dDims& d) {
  const long long FC = static_cast<long long>(d.out_ch * d.in_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long fc = 0; fc < FC; ++fc) {
    const std::size_t f = static_cast<std::size_t>(fc) / d.in_ch;
    const std::size_t c = static_cast<std::size_t>(fc) % d.in_ch;
    const double* doutf = dout + f * d.out_h * d.out_w;
    const double* inc = in + c * d.in_h * d.in_w;
    double* kc = dkernel + ((f * d.in_ch + c) * d.kh) * d.kw;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        double acc = 0.0;
        for (std::size_t oy = 0; oy < d.out_h; ++oy) {
          const long long iy = static_cast<long long>(oy * d.stride + ky) - static_cast<long long>(d.pad);
          if (iy < 0 || iy >= static_cast<long long>(d.in_h)) continue;
          for (std::size_t ox = 0; ox < d.out_w; ++ox) {
            const long long ix = static_cast<long long>(ox * d.stride + kx) - static_cast<long long>(d.pad);
            if (ix < 0 || ix >= static_cast<long long>(d.in_w)) continue;
            acc += doutf[oy * d.out_w + ox] * inc[iy * d.in_w + ix];
          }
        }
        kc[ky * d.kw + kx] = acc;
      }
    }
  }
}

void conv2d_backward_bias(const double* dout, double* dbias, const Conv2dDims& d) {
  for (std::size_t f = 0; f < d.out_ch; ++f) {
    double acc = 0.0;
    const double* doutf = dout + f * d.out_h * d.out_w;
    for (std::size_t i = 0; i < d.out_h * d.out_w; ++i) acc += doutf[i];
    dbias[f] = acc;
  }
}

void deconv2d_forward(const double* in, const double* kernel, const double* bias,
                      double* out, const Conv2dDims& d) {
  const long long F = static_cast<long long>(d.out_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long f = 0; f < F; ++f) {
    for (std::size_t oy = 0; oy < d.out_h; ++oy) {
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t c = 0; c < d.in_ch; ++c) {
          const double* inc = in + c * d.in_h * d.in_w;
          const double* kc = kernel + ((c * d.out_ch + f) * d.kh) * d.kw;
          for (std::size_t ky = 0; ky < d.kh; ++ky) {
            const long long ty = static_cast<long long>(oy + d.pad) - static_cast<long long>(ky);
            if (ty < 0 || ty % static_cast<long long>(d.stride)) continue;
            const long long iy = ty / static_cast<long long>(d.stride);
            if (iy >= static_cast<long long>(d.in_h)) continue;
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long tx = static_cast<long long>(ox + d.pad) - static_cast<long long>(kx);
              if (tx < 0 || tx % static_cast<long long>(d.stride)) continue;
              const long long ix = tx / static_cast<long long>(d.stride);
              if (ix >= static_cast<long long>(d.in_w)) continue;
              acc += inc[iy * d.in_w + ix] * kc[ky * d.kw + kx];
            }
          }
        }
        out[(f * d.out_h + oy) * d.out_w + ox] = acc;
      }
    }
  }
}

void deconv2d_backward_input(const double* dout, const double* kernel, double* din,
                             const Conv2dDims& d) {
  const long long C = static_cast<long long>(d.in_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long c = 0; c < C; ++c) {
    for (std::size_t iy = 0; iy < d.in_h; ++iy) {
      for (std::size_t ix = 0; ix < d.in_w; ++ix) {
        double acc = 0.0;
        for (std::size_t f = 0; f < d.out_ch; ++f) {
          const double* doutf = dout + f * d.out_h * d.out_w;
          const double* kc = kernel + ((c * d.out_ch + f) * d.kh) * d.kw;
          for (std::size_t ky = 0; ky < d.kh; ++ky) {
            const long long oy = static_cast<long long>(iy * d.stride + ky) - static_cast<long long>(d.pad);
            if (oy < 0 || oy >= static_cast<long long>(d.out_h)) continue;
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long ox = static_cast<long long>(ix * d.stride + kx) - static_cast<long long>(d.pad);
              if (ox < 0 || ox >= static_cast<long long>(d.out_w)) continue;
              acc += doutf[oy * d.out_w + ox] * kc[ky * d.kw + kx];
            }
          }
        }
        din[(c * d.in_h + iy) * d.in_w + ix] = acc;
      }
    }
  }
}

void deconv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                              const Conv2dDims& d) {
  const long long CF = static_cast<long long>(d.in_ch * d.out_ch);
#pragma omp parallel for schedule(static) if (d.out_ch * d.out_h * d.out_w * d.in_ch * d.kh * d.kw >= 16384)
  for (long long cf = 0; cf < CF; ++cf) {
    const std::size_t c = static_cast<std::size_t>(cf) / d.out_ch;
    const std::size_t f = static_cast<std::size_t>(cf) % d.out_ch;
    const double* doutf = dout + f * d.out_h * d.out_w;
    const double* inc = in + c * d.in_h * d.in_w;
    double* kc = dkernel + ((c * d.out_ch + f) * d.kh) * d.kw;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        double acc = 0.0;
        for (std::size_t iy = 0; iy < d.in_h; ++iy) {
          const long long oy = static_cast<long long>(iy * d.stride + ky) - static_cast<long long>(d.pad);
          if (oy < 0 || oy >= static_cast<long long>(d.out_h)) continue;
          for (std::size_t ix = 0; ix < d.in_w; ++ix) {
            const long long ox = static_cast<long long>(ix * d.stride + kx) - static_cast<long long>(d.pad);
            if (ox < 0 || ox >= static_cast<long long>(d.out_w)) continue;
            acc += inc[iy * d.in_w + ix] * doutf[oy * d.out_w + ox];
          }
        }
        kc[ky * d.kw + kx] = acc;
      }
    }
  }
}

void deconv2d_backward_bias(const double* dout, double* dbias, const Conv2dDims& d) {
  conv2d_backward_bias(dout, dbias, d);
}

}  // namespace kern

namespace ref {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      const double* brow = b + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t p, std::size_t q) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < p; ++t) acc += a[i * p + t] * b[j * p + t];
      c[i * q + j] = acc;
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k; ++i) {
    double* crow = c + i * n;
    std::memset(crow, 0, n * sizeof(double));
    for (std::size_t t = 0; t < m; ++t) {
      const double av = a[t * k + i];
      const double* brow = b + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d) {
  for (std::size_t f = 0; f < d.out_ch; ++f)
    for (std::size_t oy = 0; oy < d.out_h; ++oy)
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t c = 0; c < d.in_ch; ++c)
          for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long iy = static_cast<long long>(oy * d.stride + ky) - static_cast<long long>(d.pad);
              const long long ix = static_cast<long long>(ox * d.stride + kx) - static_cast<long long>(d.pad);
              if (iy < 0 || iy >= static_cast<long long>(d.in_h)) continue;
              if (ix < 0 || ix >= static_cast<long long>(d.in_w)) continue;
              acc += in[(c * d.in_h + iy) * d.in_w + ix] *
                     kernel[((f * d.in_ch + c) * d.kh + ky) * d.kw + kx];
            }
        out[(f * d.out_h + oy) * d.out_w + ox] = acc;
      }
}

void deconv2d_forward(const double* in, const double* kernel, const double* bias,
                      double* out, const Conv2dDims& d) {
  for (std::size_t f = 0; f < d.out_ch; ++f)
    for (std::size_t oy = 0; oy < d.out_h; ++oy)
      for (std::size_t ox = 0; ox < d.out_w; ++ox) {
        double acc = bias ? bias[f] : 0.0;
        for (std::size_t c = 0; c < d.in_ch; ++c)
          for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const long long ty = static_cast<long long>(oy + d.pad) - static_cast<long long>(ky);
              const long long tx = static_cast<long long>(ox + d.pad) - static_cast<long long>(kx);
              if (ty < 0 || ty % static_cast<long long>(d.stride)) continue;
              if (tx < 0 || tx % static_cast<long long>(d.stride)) continue;
              const long long iy = ty / static_cast<long long>(d.stride);
              const long long ix = tx / static_cast<long long>(d.stride);
              if (iy >= static_cast<long long>(d.in_h) || ix >= static_cast<long long>(d.in_w)) continue;
              acc += in[(c * d.in_h + iy) * d.in_w + ix] *
                     kernel[((c * d.out_ch + f) * d.kh + ky) * d.kw + kx];
            }
        out[(f * d.out_h + oy) * d.out_w + ox] = acc;
      }
}

}  // namespace ref

}  // namespace afford::num

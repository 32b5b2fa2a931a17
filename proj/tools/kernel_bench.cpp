// Times the OpenMP kernels against the serial reference implementation and
// checks that the results stay bitwise identical. Run with different
// OMP_NUM_THREADS to see scaling; --quick shrinks the sizes for smoke tests.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "afford/kernels.hpp"
#include "afford/rng.hpp"
#include "afford/tensor.hpp"

using afford::num::Conv2dDims;
using afford::num::Rng;
using afford::num::Tensor;

namespace {

int threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.normal();
  return t;
}

template <typename F>
double time_ms(int reps, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

void bench_matmul(std::size_t n, int reps) {
  Rng rng(1);
  const Tensor a = random_tensor(rng, {n, n});
  const Tensor b = random_tensor(rng, {n, n});
  Tensor c_par({n, n}), c_ser({n, n});
  const double par = time_ms(reps, [&] {
    afford::num::kern::matmul(a.data.data(), b.data.data(), c_par.data.data(), n, n, n);
  });
  const double ser = time_ms(reps, [&] {
    afford::num::ref::matmul(a.data.data(), b.data.data(), c_ser.data.data(), n, n, n);
  });
  std::printf("matmul %4zux%-4zu  serial %8.3f ms  openmp %8.3f ms  speedup %5.2fx  %s\n", n, n,
              ser, par, ser / par, bitwise_equal(c_par, c_ser) ? "bitwise-equal" : "MISMATCH");
}

void bench_conv(std::size_t side, std::size_t cin, std::size_t cout, int reps) {
  Rng rng(2);
  const Tensor in = random_tensor(rng, {cin, side, side});
  const Tensor k = random_tensor(rng, {cout, cin, 3, 3});
  const Tensor bias = random_tensor(rng, {cout});
  const Conv2dDims d = afford::num::conv2d_dims(cin, side, side, cout, 3, 3, 2, 1);
  Tensor out_par({d.out_ch, d.out_h, d.out_w}), out_ser({d.out_ch, d.out_h, d.out_w});
  const double par = time_ms(reps, [&] {
    afford::num::kern::conv2d_forward(in.data.data(), k.data.data(), bias.data.data(),
                                      out_par.data.data(), d);
  });
  const double ser = time_ms(reps, [&] {
    afford::num::ref::conv2d_forward(in.data.data(), k.data.data(), bias.data.data(),
                                     out_ser.data.data(), d);
  });
  std::printf("conv2d %3zux%-3zu %2zu->%-3zu serial %8.3f ms  openmp %8.3f ms  speedup %5.2fx  %s\n",
              side, side, cin, cout, ser, par, ser / par,
              bitwise_equal(out_par, out_ser) ? "bitwise-equal" : "MISMATCH");
}

void bench_deconv(std::size_t side, std::size_t cin, std::size_t cout, int reps) {
  Rng rng(3);
  const Tensor in = random_tensor(rng, {cin, side, side});
  const Tensor k = random_tensor(rng, {cin, cout, 4, 4});
  const Tensor bias = random_tensor(rng, {cout});
  const Conv2dDims d = afford::num::deconv2d_dims(cin, side, side, cout, 4, 4, 2, 1);
  Tensor out_par({d.out_ch, d.out_h, d.out_w}), out_ser({d.out_ch, d.out_h, d.out_w});
  const double par = time_ms(reps, [&] {
    afford::num::kern::deconv2d_forward(in.data.data(), k.data.data(), bias.data.data(),
                                        out_par.data.data(), d);
  });
  const double ser = time_ms(reps, [&] {
    afford::num::ref::deconv2d_forward(in.data.data(), k.data.data(), bias.data.data(),
                                       out_ser.data.data(), d);
  });
  std::printf("deconv %3zux%-3zu %2zu->%-3zu serial %8.3f ms  openmp %8.3f ms  speedup %5.2fx  %s\n",
              side, side, cin, cout, ser, par, ser / par,
              bitwise_equal(out_par, out_ser) ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  std::printf("threads: %d\n", threads());
  if (quick) {
    bench_matmul(64, 10);
    bench_conv(32, 8, 16, 10);
    bench_deconv(16, 16, 8, 10);
    return 0;
  }
  bench_matmul(128, 20);
  bench_matmul(256, 10);
  bench_matmul(512, 3);
  bench_conv(32, 16, 32, 50);
  bench_conv(64, 16, 32, 20);
  bench_conv(128, 8, 16, 10);
  bench_deconv(16, 32, 16, 50);
  bench_deconv(32, 16, 8, 20);
  bench_deconv(64, 8, 4, 10);
  return 0;
}

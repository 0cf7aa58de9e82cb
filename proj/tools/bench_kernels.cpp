// Times the serial reference kernels against the OpenMP variants on the
// layer shapes the encoder/decoder actually use.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "reacher/kernels.hpp"
#include "reacher/rng.hpp"

using namespace reacher;
using kernels::ConvShape;
using clk = std::chrono::high_resolution_clock;

namespace {

template <class F>
double time_ms(F&& f, int reps) {
  f();  // warmup
  auto t0 = clk::now();
  for (int i = 0; i < reps; ++i) f();
  auto t1 = clk::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

template <class T>
void bench_conv(const char* tag, int ic, int hw, int oc, int stride, int reps) {
  ConvShape s;
  s.ic = ic;
  s.ih = s.iw = hw;
  s.oc = oc;
  s.k = 5;
  s.stride = stride;
  s.pad = 2;
  s.oh = kernels::conv_out_dim(hw, 5, stride, 2);
  s.ow = kernels::conv_out_dim(hw, 5, stride, 2);
  Rng rng(1);
  std::vector<T> x(static_cast<size_t>(ic) * hw * hw), w(static_cast<size_t>(oc) * ic * 25), b(oc),
      y(static_cast<size_t>(oc) * s.oh * s.ow);
  for (T& v : x) v = static_cast<T>(rng.normal());
  for (T& v : w) v = static_cast<T>(rng.normal() * 0.1);
  std::vector<T> dy(y.size(), T(1)), dx(x.size()), dw(w.size()), db(b.size());

  const double gmac_fwd = 1e-9 * s.oc * s.oh * s.ow * s.ic * 25;
  double ms_s = time_ms([&] { kernels::conv2d_forward_serial(x.data(), w.data(), b.data(), y.data(), s); }, reps);
  double ms_o = time_ms([&] { kernels::conv2d_forward_omp(x.data(), w.data(), b.data(), y.data(), s); }, reps);
  std::printf("%-28s fwd  serial %7.3f ms (%5.2f GMAC/s) | omp %7.3f ms (%5.2f GMAC/s) | x%.2f\n",
              tag, ms_s, gmac_fwd / ms_s * 1e3, ms_o, gmac_fwd / ms_o * 1e3, ms_s / ms_o);
  ms_s = time_ms([&] { kernels::conv2d_backward_serial(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), s); }, reps);
  ms_o = time_ms([&] { kernels::conv2d_backward_omp(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), s); }, reps);
  std::printf("%-28s bwd  serial %7.3f ms (%5.2f GMAC/s) | omp %7.3f ms (%5.2f GMAC/s) | x%.2f\n",
              tag, ms_s, 2 * gmac_fwd / ms_s * 1e3, ms_o, 2 * gmac_fwd / ms_o * 1e3, ms_s / ms_o);
}

template <class T>
void bench_linear(const char* tag, int out, int in, int reps) {
  Rng rng(2);
  std::vector<T> x(in), w(static_cast<size_t>(out) * in), b(out), y(out);
  for (T& v : x) v = static_cast<T>(rng.normal());
  for (T& v : w) v = static_cast<T>(rng.normal() * 0.1);
  std::vector<T> dy(out, T(1)), dx(in), dw(w.size()), db(out);
  const double gmac = 1e-9 * out * in;
  double ms_s = time_ms([&] { kernels::linear_forward_serial(x.data(), w.data(), b.data(), y.data(), out, in); }, reps);
  double ms_o = time_ms([&] { kernels::linear_forward_omp(x.data(), w.data(), b.data(), y.data(), out, in); }, reps);
  std::printf("%-28s fwd  serial %7.3f ms (%5.2f GMAC/s) | omp %7.3f ms (%5.2f GMAC/s) | x%.2f\n",
              tag, ms_s, gmac / ms_s * 1e3, ms_o, gmac / ms_o * 1e3, ms_s / ms_o);
  ms_s = time_ms([&] { kernels::linear_backward_serial(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), out, in); }, reps);
  ms_o = time_ms([&] { kernels::linear_backward_omp(x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data(), out, in); }, reps);
  std::printf("%-28s bwd  serial %7.3f ms (%5.2f GMAC/s) | omp %7.3f ms (%5.2f GMAC/s) | x%.2f\n",
              tag, ms_s, 2 * gmac / ms_s * 1e3, ms_o, 2 * gmac / ms_o * 1e3, ms_s / ms_o);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled\n");
#endif
  std::printf("-- float --\n");
  bench_conv<float>("conv 1->8 64x64 s1", 1, 64, 8, 1, 20);
  bench_conv<float>("conv 8->8 64x64 s2", 8, 64, 8, 2, 20);
  bench_conv<float>("conv 8->16 32x32 s1", 8, 32, 16, 1, 20);
  bench_conv<float>("conv 32->64 8x8 s1", 32, 8, 64, 1, 50);
  bench_linear<float>("linear 1024->4096", 4096, 1024, 50);
  bench_linear<float>("linear 64->1024", 1024, 64, 200);
  std::printf("-- double --\n");
  bench_conv<double>("conv 8->16 32x32 s1", 8, 32, 16, 1, 20);
  bench_linear<double>("linear 1024->4096", 4096, 1024, 50);
  return 0;
}

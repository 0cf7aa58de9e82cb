#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "reacher/kernels.hpp"
#include "reacher/rng.hpp"

using namespace reacher;
using kernels::ConvShape;

namespace {

template <class T>
std::vector<T> randv(size_t n, Rng& rng, double scale = 1.0) {
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(rng.normal() * scale);
  return v;
}

template <class T>
void check_conv_pair(int ic, int ih, int iw, int oc, int k, int stride, int pad, uint64_t seed) {
  ConvShape s;
  s.ic = ic;
  s.ih = ih;
  s.iw = iw;
  s.oc = oc;
  s.k = k;
  s.stride = stride;
  s.pad = pad;
  s.oh = kernels::conv_out_dim(ih, k, stride, pad);
  s.ow = kernels::conv_out_dim(iw, k, stride, pad);
  REQUIRE(s.oh > 0);
  REQUIRE(s.ow > 0);

  Rng rng(seed);
  auto x = randv<T>(static_cast<size_t>(ic) * ih * iw, rng);
  auto w = randv<T>(static_cast<size_t>(oc) * ic * k * k, rng, 0.3);
  auto b = randv<T>(oc, rng);
  std::vector<T> y1(static_cast<size_t>(oc) * s.oh * s.ow), y2 = y1;
  kernels::conv2d_forward_serial(x.data(), w.data(), b.data(), y1.data(), s);
  kernels::conv2d_forward_omp(x.data(), w.data(), b.data(), y2.data(), s);
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

  auto dy = randv<T>(y1.size(), rng);
  // seed grads with identical nonzero noise: accumulation must match too
  auto dx1 = randv<T>(x.size(), rng, 0.01);
  auto dw1 = randv<T>(w.size(), rng, 0.01);
  auto db1 = randv<T>(b.size(), rng, 0.01);
  auto dx2 = dx1;
  auto dw2 = dw1;
  auto db2 = db1;
  kernels::conv2d_backward_serial(x.data(), w.data(), dy.data(), dx1.data(), dw1.data(), db1.data(), s);
  kernels::conv2d_backward_omp(x.data(), w.data(), dy.data(), dx2.data(), dw2.data(), db2.data(), s);
  // the im2col path regroups dx additions per position: rounding-level only
  const bool exact_dx = ic * k * k < kernels::kIm2colThreshold;
  const double tol = sizeof(T) == 4 ? 1e-4 : 1e-12;
  for (size_t i = 0; i < dx1.size(); ++i) {
    if (exact_dx)
      CHECK(dx1[i] == dx2[i]);
    else
      CHECK(std::abs(double(dx1[i] - dx2[i])) <=
            tol * std::max(1.0, std::abs(double(dx1[i]))));
  }
  for (size_t i = 0; i < dw1.size(); ++i) CHECK(dw1[i] == dw2[i]);
  for (size_t i = 0; i < db1.size(); ++i) CHECK(db1[i] == db2[i]);

  // omp results are reproducible call to call
  std::vector<T> y3(y1.size());
  kernels::conv2d_forward_omp(x.data(), w.data(), b.data(), y3.data(), s);
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y2[i] == y3[i]);
}

}  // namespace

TEST_CASE("conv kernels: omp matches serial bitwise") {
  check_conv_pair<double>(3, 16, 16, 8, 5, 1, 2, 1);
  check_conv_pair<double>(8, 16, 16, 8, 5, 2, 2, 2);
  check_conv_pair<double>(4, 9, 9, 5, 3, 2, 1, 3);
  check_conv_pair<double>(1, 8, 8, 2, 1, 1, 0, 4);
  check_conv_pair<float>(3, 32, 32, 8, 5, 1, 2, 5);
  check_conv_pair<float>(8, 15, 17, 6, 5, 2, 2, 6);

  // randomized shapes
  Rng rng(99);
  for (int it = 0; it < 20; ++it) {
    int k = 1 + 2 * rng.uniform_int(0, 2);
    check_conv_pair<float>(rng.uniform_int(1, 6), rng.uniform_int(k, 14), rng.uniform_int(k, 14),
                           rng.uniform_int(1, 6), k, rng.uniform_int(1, 2), rng.uniform_int(0, 2),
                           1000 + it);
  }
}

TEST_CASE("linear kernels: omp matches serial bitwise") {
  for (auto [out, in] : {std::pair{7, 5}, {64, 128}, {1024, 256}, {3, 4096}}) {
    Rng rng(derive_seed(5, "lin", out));
    auto x = randv<float>(in, rng);
    auto w = randv<float>(static_cast<size_t>(out) * in, rng, 0.1);
    auto b = randv<float>(out, rng);
    std::vector<float> y1(out), y2(out);
    kernels::linear_forward_serial(x.data(), w.data(), b.data(), y1.data(), out, in);
    kernels::linear_forward_omp(x.data(), w.data(), b.data(), y2.data(), out, in);
    // the omp forward uses lane-grouped dots: rounding-level agreement
    for (int i = 0; i < out; ++i)
      CHECK(std::abs(y1[i] - y2[i]) <= 1e-4f * std::max(1.0f, std::abs(y1[i])));
    // but it is reproducible call to call
    std::vector<float> y3(out);
    kernels::linear_forward_omp(x.data(), w.data(), b.data(), y3.data(), out, in);
    for (int i = 0; i < out; ++i) CHECK(y2[i] == y3[i]);

    auto dy = randv<float>(out, rng);
    auto dx1 = randv<float>(in, rng, 0.01);
    auto dw1 = randv<float>(static_cast<size_t>(out) * in, rng, 0.01);
    auto db1 = randv<float>(out, rng, 0.01);
    auto dx2 = dx1;
    auto dw2 = dw1;
    auto db2 = db1;
    kernels::linear_backward_serial(x.data(), w.data(), dy.data(), dx1.data(), dw1.data(),
                                    db1.data(), out, in);
    kernels::linear_backward_omp(x.data(), w.data(), dy.data(), dx2.data(), dw2.data(), db2.data(),
                                 out, in);
    for (int i = 0; i < in; ++i) CHECK(dx1[i] == dx2[i]);
    for (size_t i = 0; i < dw1.size(); ++i) CHECK(dw1[i] == dw2[i]);
    for (int i = 0; i < out; ++i) CHECK(db1[i] == db2[i]);
  }
}

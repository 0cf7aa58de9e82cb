#pragma once

// Convolution and linear-layer kernels. The omp variants parallelize with an
// owner-computes split: every output element is written by exactly one
// thread, with a fixed serial accumulation order, so results are identical
// for any thread count. The serial variants are naive reference loops kept
// for testing and benchmarking.

namespace reacher::kernels {

struct ConvShape {
  int ic, ih, iw;      // input channels / height / width
  int oc, oh, ow;      // output
  int k, stride, pad;  // square kernel
};

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Convolutions with ic*k*k at or above this go through im2col in the omp
// variants. Their input-gradient accumulation is regrouped per output
// position there, so it matches the serial reference to rounding error
// rather than bitwise; all other outputs stay bitwise-identical.
extern const int kIm2colThreshold;

template <class T>
void conv2d_forward_serial(const T* x, const T* w, const T* b, T* y, const ConvShape& s);
template <class T>
void conv2d_forward_omp(const T* x, const T* w, const T* b, T* y, const ConvShape& s);

// dx += backprop of dy through w; dw/db += gradients
template <class T>
void conv2d_backward_serial(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                            const ConvShape& s);
template <class T>
void conv2d_backward_omp(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                         const ConvShape& s);

// y[i] = b[i] + sum_j w[i*in + j] * x[j]
template <class T>
void linear_forward_serial(const T* x, const T* w, const T* b, T* y, int out, int in);
template <class T>
void linear_forward_omp(const T* x, const T* w, const T* b, T* y, int out, int in);

template <class T>
void linear_backward_serial(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int out,
                            int in);
template <class T>
void linear_backward_omp(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int out, int in);

}  // namespace reacher::kernels

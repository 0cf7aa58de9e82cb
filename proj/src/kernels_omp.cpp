#include "reacher/kernels.hpp"

#include <algorithm>
#include <vector>

// Owner-computes parallel kernels: every output element is written by
// exactly one thread with a fixed accumulation order, so results do not
// depend on the thread count. Deep convolutions go through an im2col buffer;
// shallow ones use direct loops. Conv forward, weight and bias gradients
// keep the serial reference's per-element accumulation order bitwise; the
// im2col input-gradient path and the linear forward regroup additions for
// vectorization and match the reference to rounding error instead.

namespace reacher::kernels {

namespace {

// valid output range [lo, hi] such that o*stride - pad + k stays inside [0, n)
inline void valid_range(int k, int pad, int stride, int n, int out_n, int& lo, int& hi) {
  const int a = pad - k;
  lo = a <= 0 ? 0 : (a + stride - 1) / stride;
  const int b = n - 1 + pad - k;
  hi = b < 0 ? -1 : b / stride;
  if (hi > out_n - 1) hi = out_n - 1;
}

template <class T>
void im2col(const T* x, const ConvShape& s, T* col) {
  const int L = s.ic * s.k * s.k;
#pragma omp parallel for collapse(2) schedule(static)
  for (int oy = 0; oy < s.oh; ++oy) {
    for (int ox = 0; ox < s.ow; ++ox) {
      T* row = col + (static_cast<long>(oy) * s.ow + ox) * L;
      for (int ic = 0; ic < s.ic; ++ic) {
        const T* plane = x + static_cast<long>(ic) * s.ih * s.iw;
        for (int ky = 0; ky < s.k; ++ky) {
          const int iy = oy * s.stride - s.pad + ky;
          for (int kx = 0; kx < s.k; ++kx) {
            const int ix = ox * s.stride - s.pad + kx;
            *row++ = (iy >= 0 && iy < s.ih && ix >= 0 && ix < s.iw)
                         ? plane[static_cast<long>(iy) * s.iw + ix]
                         : T(0);
          }
        }
      }
    }
  }
}

}  // namespace

const int kIm2colThreshold = 64;  // ic*k*k at or above this uses im2col

template <class T>
void conv2d_forward_omp(const T* x, const T* w, const T* b, T* y, const ConvShape& s) {
  const int L = s.ic * s.k * s.k;
  const long npos = static_cast<long>(s.oh) * s.ow;
  if (L >= kIm2colThreshold) {
    // transposed weights let the accumulation vectorize across output
    // channels while keeping the per-element term order (l ascending)
    std::vector<T> col(npos * L);
    im2col(x, s, col.data());
    std::vector<T> wt(static_cast<long>(L) * s.oc);
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.oc; ++oc)
      for (int l = 0; l < L; ++l) wt[static_cast<long>(l) * s.oc + oc] = w[static_cast<long>(oc) * L + l];
#pragma omp parallel
    {
      std::vector<T> acc(s.oc);
#pragma omp for schedule(static)
      for (long p = 0; p < npos; ++p) {
        for (int oc = 0; oc < s.oc; ++oc) acc[oc] = b ? b[oc] : T(0);
        const T* cr = col.data() + p * L;
        for (int l = 0; l < L; ++l) {
          const T v = cr[l];
          const T* wl = wt.data() + static_cast<long>(l) * s.oc;
          for (int oc = 0; oc < s.oc; ++oc) acc[oc] += wl[oc] * v;
        }
        for (int oc = 0; oc < s.oc; ++oc) y[static_cast<long>(oc) * npos + p] = acc[oc];
      }
    }
    return;
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.oc; ++oc) {
    for (int oy = 0; oy < s.oh; ++oy) {
      T* yrow = y + (static_cast<long>(oc) * s.oh + oy) * s.ow;
      for (int ox = 0; ox < s.ow; ++ox) yrow[ox] = b ? b[oc] : T(0);
      for (int ic = 0; ic < s.ic; ++ic) {
        for (int ky = 0; ky < s.k; ++ky) {
          const int iy = oy * s.stride - s.pad + ky;
          if (iy < 0 || iy >= s.ih) continue;
          const T* xrow = x + (static_cast<long>(ic) * s.ih + iy) * s.iw;
          const T* wrow = w + ((static_cast<long>(oc) * s.ic + ic) * s.k + ky) * s.k;
          for (int kx = 0; kx < s.k; ++kx) {
            const T wv = wrow[kx];
            int lo, hi;
            valid_range(kx, s.pad, s.stride, s.iw, s.ow, lo, hi);
            const T* xs = xrow - s.pad + kx;
            for (int ox = lo; ox <= hi; ++ox) yrow[ox] += wv * xs[ox * s.stride];
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_backward_omp(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                         const ConvShape& s) {
  const int L = s.ic * s.k * s.k;
  const long npos = static_cast<long>(s.oh) * s.ow;
  if (db) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.oc; ++oc) {
      T acc = db[oc];  // seed with the prior value to keep serial add order
      const T* plane = dy + static_cast<long>(oc) * npos;
      for (long i = 0; i < npos; ++i) acc += plane[i];
      db[oc] = acc;
    }
  }

  if (L >= kIm2colThreshold) {
    if (dw) {
      std::vector<T> col(npos * L);
      im2col(x, s, col.data());
#pragma omp parallel for schedule(static)
      for (int oc = 0; oc < s.oc; ++oc) {
        const T* dyrow = dy + static_cast<long>(oc) * npos;
        T* dwrow = dw + static_cast<long>(oc) * L;
        for (long p = 0; p < npos; ++p) {
          const T g = dyrow[p];
          const T* cr = col.data() + p * L;
          for (int l = 0; l < L; ++l) dwrow[l] += g * cr[l];
        }
      }
    }
    if (dx) {
      std::vector<T> dcol(npos * L);
#pragma omp parallel for collapse(2) schedule(static)
      for (int oy = 0; oy < s.oh; ++oy) {
        for (int ox = 0; ox < s.ow; ++ox) {
          const long p = static_cast<long>(oy) * s.ow + ox;
          T* row = dcol.data() + p * L;
          for (int l = 0; l < L; ++l) row[l] = T(0);
          for (int oc = 0; oc < s.oc; ++oc) {
            const T g = dy[static_cast<long>(oc) * npos + p];
            const T* wrow = w + static_cast<long>(oc) * L;
            for (int l = 0; l < L; ++l) row[l] += g * wrow[l];
          }
        }
      }
      // col2im: input channels are partitioned across threads
#pragma omp parallel for schedule(static)
      for (int ic = 0; ic < s.ic; ++ic) {
        T* plane = dx + static_cast<long>(ic) * s.ih * s.iw;
        for (int oy = 0; oy < s.oh; ++oy) {
          for (int ox = 0; ox < s.ow; ++ox) {
            const T* row = dcol.data() + (static_cast<long>(oy) * s.ow + ox) * L +
                           static_cast<long>(ic) * s.k * s.k;
            for (int ky = 0; ky < s.k; ++ky) {
              const int iy = oy * s.stride - s.pad + ky;
              if (iy < 0 || iy >= s.ih) continue;
              for (int kx = 0; kx < s.k; ++kx) {
                const int ix = ox * s.stride - s.pad + kx;
                if (ix < 0 || ix >= s.iw) continue;
                plane[static_cast<long>(iy) * s.iw + ix] += row[ky * s.k + kx];
              }
            }
          }
        }
      }
    }
    return;
  }

  if (dw) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < s.oc; ++oc) {
      for (int ic = 0; ic < s.ic; ++ic) {
        T* wblock = dw + (static_cast<long>(oc) * s.ic + ic) * s.k * s.k;
        for (int ky = 0; ky < s.k; ++ky) {
          int oy_lo, oy_hi;
          valid_range(ky, s.pad, s.stride, s.ih, s.oh, oy_lo, oy_hi);
          for (int kx = 0; kx < s.k; ++kx) {
            int ox_lo, ox_hi;
            valid_range(kx, s.pad, s.stride, s.iw, s.ow, ox_lo, ox_hi);
            T acc = wblock[ky * s.k + kx];
            for (int oy = oy_lo; oy <= oy_hi; ++oy) {
              const T* dyrow = dy + (static_cast<long>(oc) * s.oh + oy) * s.ow;
              const T* xrow =
                  x + (static_cast<long>(ic) * s.ih + oy * s.stride - s.pad + ky) * s.iw - s.pad + kx;
              for (int ox = ox_lo; ox <= ox_hi; ++ox) acc += dyrow[ox] * xrow[ox * s.stride];
            }
            wblock[ky * s.k + kx] = acc;
          }
        }
      }
    }
  }
  if (dx) {
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < s.ic; ++ic) {
      for (int oc = 0; oc < s.oc; ++oc) {
        const T* wblock = w + (static_cast<long>(oc) * s.ic + ic) * s.k * s.k;
        for (int oy = 0; oy < s.oh; ++oy) {
          const T* dyrow = dy + (static_cast<long>(oc) * s.oh + oy) * s.ow;
          for (int ky = 0; ky < s.k; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.ih) continue;
            T* dxrow = dx + (static_cast<long>(ic) * s.ih + iy) * s.iw;
            // kx descending makes the per-element contribution order match
            // the serial reference (ox ascending)
            for (int kx = s.k - 1; kx >= 0; --kx) {
              const T wv = wblock[ky * s.k + kx];
              int lo, hi;
              valid_range(kx, s.pad, s.stride, s.iw, s.ow, lo, hi);
              T* xs = dxrow - s.pad + kx;
              for (int ox = lo; ox <= hi; ++ox) xs[ox * s.stride] += wv * dyrow[ox];
            }
          }
        }
      }
    }
  }
}

namespace {

// Dot product with a fixed 16-lane accumulation grouping: vectorizable under
// strict FP semantics and deterministic, but not bitwise-equal to a plain
// left-to-right sum.
template <class T>
T dot_lanes(const T* a, const T* b, int n) {
  constexpr int kLanes = 16;
  T s[kLanes] = {T(0)};
  int j = 0;
  for (; j + kLanes <= n; j += kLanes)
    for (int u = 0; u < kLanes; ++u) s[u] += a[j + u] * b[j + u];
  T tail = T(0);
  for (; j < n; ++j) tail += a[j] * b[j];
  for (int span = kLanes / 2; span > 0; span /= 2)
    for (int u = 0; u < span; ++u) s[u] += s[u + span];
  return s[0] + tail;
}

}  // namespace

template <class T>
void linear_forward_omp(const T* x, const T* w, const T* b, T* y, int out, int in) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < out; ++i)
    y[i] = (b ? b[i] : T(0)) + dot_lanes(w + static_cast<long>(i) * in, x, in);
}

template <class T>
void linear_backward_omp(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int out,
                         int in) {
  if (db) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < out; ++i) db[i] += dy[i];
  }
  if (dw) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < out; ++i) {
      const T g = dy[i];
      T* dwrow = dw + static_cast<long>(i) * in;
      for (int j = 0; j < in; ++j) dwrow[j] += g * x[j];
    }
  }
  if (dx) {
    // column tiles keep writes owned and row reads contiguous
    constexpr int kTile = 512;
    const int ntiles = (in + kTile - 1) / kTile;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < ntiles; ++t) {
      const int jlo = t * kTile;
      const int jhi = std::min(in, jlo + kTile);
      for (int i = 0; i < out; ++i) {
        const T g = dy[i];
        const T* wrow = w + static_cast<long>(i) * in;
        for (int j = jlo; j < jhi; ++j) dx[j] += g * wrow[j];
      }
    }
  }
}

template void conv2d_forward_omp<float>(const float*, const float*, const float*, float*, const ConvShape&);
template void conv2d_forward_omp<double>(const double*, const double*, const double*, double*, const ConvShape&);
template void conv2d_backward_omp<float>(const float*, const float*, const float*, float*, float*, float*, const ConvShape&);
template void conv2d_backward_omp<double>(const double*, const double*, const double*, double*, double*, double*, const ConvShape&);
template void linear_forward_omp<float>(const float*, const float*, const float*, float*, int, int);
template void linear_forward_omp<double>(const double*, const double*, const double*, double*, int, int);
template void linear_backward_omp<float>(const float*, const float*, const float*, float*, float*, float*, int, int);
template void linear_backward_omp<double>(const double*, const double*, const double*, double*, double*, double*, int, int);

}  // namespace reacher::kernels

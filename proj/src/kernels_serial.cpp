#include "reacher/kernels.hpp"

// Reference kernels: direct transcription of the defining sums.

namespace reacher::kernels {

template <class T>
void conv2d_forward_serial(const T* x, const T* w, const T* b, T* y, const ConvShape& s) {
  for (int oc = 0; oc < s.oc; ++oc) {
    for (int oy = 0; oy < s.oh; ++oy) {
      for (int ox = 0; ox < s.ow; ++ox) {
        T acc = b ? b[oc] : T(0);
        for (int ic = 0; ic < s.ic; ++ic) {
          for (int ky = 0; ky < s.k; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.ih) continue;
            for (int kx = 0; kx < s.k; ++kx) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.iw) continue;
              acc += w[((static_cast<long>(oc) * s.ic + ic) * s.k + ky) * s.k + kx] *
                     x[(static_cast<long>(ic) * s.ih + iy) * s.iw + ix];
            }
          }
        }
        y[(static_cast<long>(oc) * s.oh + oy) * s.ow + ox] = acc;
      }
    }
  }
}

template <class T>
void conv2d_backward_serial(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db,
                            const ConvShape& s) {
  for (int oc = 0; oc < s.oc; ++oc) {
    for (int oy = 0; oy < s.oh; ++oy) {
      for (int ox = 0; ox < s.ow; ++ox) {
        const T g = dy[(static_cast<long>(oc) * s.oh + oy) * s.ow + ox];
        if (db) db[oc] += g;
        for (int ic = 0; ic < s.ic; ++ic) {
          for (int ky = 0; ky < s.k; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.ih) continue;
            for (int kx = 0; kx < s.k; ++kx) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.iw) continue;
              const long wi = ((static_cast<long>(oc) * s.ic + ic) * s.k + ky) * s.k + kx;
              const long xi = (static_cast<long>(ic) * s.ih + iy) * s.iw + ix;
              if (dx) dx[xi] += g * w[wi];
              if (dw) dw[wi] += g * x[xi];
            }
          }
        }
      }
    }
  }
}

template <class T>
void linear_forward_serial(const T* x, const T* w, const T* b, T* y, int out, int in) {
  for (int i = 0; i < out; ++i) {
    T acc = b ? b[i] : T(0);
    const T* row = w + static_cast<long>(i) * in;
    for (int j = 0; j < in; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

template <class T>
void linear_backward_serial(const T* x, const T* w, const T* dy, T* dx, T* dw, T* db, int out,
                            int in) {
  for (int i = 0; i < out; ++i) {
    const T g = dy[i];
    if (db) db[i] += g;
    const T* wrow = w + static_cast<long>(i) * in;
    T* dwrow = dw ? dw + static_cast<long>(i) * in : nullptr;
    for (int j = 0; j < in; ++j) {
      if (dx) dx[j] += g * wrow[j];
      if (dwrow) dwrow[j] += g * x[j];
    }
  }
}

template void conv2d_forward_serial<float>(const float*, const float*, const float*, float*, const ConvShape&);
template void conv2d_forward_serial<double>(const double*, const double*, const double*, double*, const ConvShape&);
template void conv2d_backward_serial<float>(const float*, const float*, const float*, float*, float*, float*, const ConvShape&);
template void conv2d_backward_serial<double>(const double*, const double*, const double*, double*, double*, double*, const ConvShape&);
template void linear_forward_serial<float>(const float*, const float*, const float*, float*, int, int);
template void linear_forward_serial<double>(const double*, const double*, const double*, double*, int, int);
template void linear_backward_serial<float>(const float*, const float*, const float*, float*, float*, float*, int, int);
template void linear_backward_serial<double>(const double*, const double*, const double*, double*, double*, double*, int, int);

}  // namespace reacher::kernels

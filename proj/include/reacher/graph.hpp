#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reacher/kernels.hpp"
#include "reacher/rng.hpp"
#include "reacher/tensor.hpp"

namespace reacher::ad {

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> shape) : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(T(0)); }
};

enum class Op {
  kConstant,
  kLeaf,
  kParam,
  kConv2d,
  kLinear,
  kElu,
  kSigmoid,
  kAdd,
  kMul,
  kScale,
  kMean,
  kReshape,
  kConcat,
  kSoftmax,
  kSoftmaxXent,
  kBceMean,
  kTotalVariation,
};

// Reverse-mode tape. One graph instance per forward pass; backward walks the
// tape once and accumulates gradients into leaves and bound parameters.
template <class T>
class Graph {
 public:
  struct Node {
    Tensor<T> val;
    Tensor<T> grad;  // allocated on demand during backward
    Op op = Op::kConstant;
    int a = -1, b = -1, c = -1;
    bool needs_grad = false;
    Param<T>* bound = nullptr;
    kernels::ConvShape conv{};
    int label = 0;
    T scalar = T(0);
    Tensor<T> aux;  // softmax probabilities
  };

  int constant(Tensor<T> t) {
    Node n;
    n.val = std::move(t);
    n.op = Op::kConstant;
    return push(std::move(n));
  }

  int leaf(Tensor<T> t) {
    Node n;
    n.val = std::move(t);
    n.op = Op::kLeaf;
    n.needs_grad = true;
    return push(std::move(n));
  }

  int param(Param<T>& p) {
    Node n;
    n.val = p.value;  // shares storage
    n.grad = p.grad;  // accumulates in place
    n.op = Op::kParam;
    n.needs_grad = true;
    n.bound = &p;
    return push(std::move(n));
  }

  int conv2d(int x, int w, int b, int stride, int pad) {
    const auto& xs = at(x).val.shape;
    const auto& ws = at(w).val.shape;
    if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0])
      throw std::invalid_argument("conv2d: shape mismatch");
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");
    kernels::ConvShape cs;
    cs.ic = xs[0];
    cs.ih = xs[1];
    cs.iw = xs[2];
    cs.oc = ws[0];
    cs.k = ws[2];
    cs.stride = stride;
    cs.pad = pad;
    cs.oh = kernels::conv_out_dim(cs.ih, cs.k, stride, pad);
    cs.ow = kernels::conv_out_dim(cs.iw, cs.k, stride, pad);
    if (at(b).val.numel() != cs.oc) throw std::invalid_argument("conv2d: bias size mismatch");
    Node n;
    n.val = Tensor<T>({cs.oc, cs.oh, cs.ow});
    n.op = Op::kConv2d;
    n.a = x;
    n.b = w;
    n.c = b;
    n.conv = cs;
    kernels::conv2d_forward_omp(at(x).val.data(), at(w).val.data(), at(b).val.data(), n.val.data(), cs);
    return push(std::move(n));
  }

  int linear(int x, int w, int b) {
    const auto& ws = at(w).val.shape;
    if (ws.size() != 2 || at(x).val.numel() != ws[1] || at(b).val.numel() != ws[0])
      throw std::invalid_argument("linear: shape mismatch");
    Node n;
    n.val = Tensor<T>({ws[0]});
    n.op = Op::kLinear;
    n.a = x;
    n.b = w;
    n.c = b;
    kernels::linear_forward_omp(at(x).val.data(), at(w).val.data(), at(b).val.data(), n.val.data(),
                                ws[0], ws[1]);
    return push(std::move(n));
  }

  int elu(int x) {
    Node n;
    n.val = Tensor<T>(at(x).val.shape);
    n.op = Op::kElu;
    n.a = x;
    const T* xi = at(x).val.data();
    T* y = n.val.data();
    for (int64_t i = 0, m = at(x).val.numel(); i < m; ++i)
      y[i] = xi[i] > T(0) ? xi[i] : std::expm1(xi[i]);
    return push(std::move(n));
  }

  int sigmoid(int x) {
    Node n;
    n.val = Tensor<T>(at(x).val.shape);
    n.op = Op::kSigmoid;
    n.a = x;
    const T* xi = at(x).val.data();
    T* y = n.val.data();
    for (int64_t i = 0, m = at(x).val.numel(); i < m; ++i) {
      if (xi[i] >= T(0))
        y[i] = T(1) / (T(1) + std::exp(-xi[i]));
      else {
        const T e = std::exp(xi[i]);
        y[i] = e / (T(1) + e);
      }
    }
    return push(std::move(n));
  }

  int add(int a, int b) {
    if (at(a).val.numel() != at(b).val.numel()) throw std::invalid_argument("add: size mismatch");
    Node n;
    n.val = Tensor<T>(at(a).val.shape);
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    const T* pa = at(a).val.data();
    const T* pb = at(b).val.data();
    T* y = n.val.data();
    for (int64_t i = 0, m = n.val.numel(); i < m; ++i) y[i] = pa[i] + pb[i];
    return push(std::move(n));
  }

  int mul(int a, int b) {
    if (at(a).val.numel() != at(b).val.numel()) throw std::invalid_argument("mul: size mismatch");
    Node n;
    n.val = Tensor<T>(at(a).val.shape);
    n.op = Op::kMul;
    n.a = a;
    n.b = b;
    const T* pa = at(a).val.data();
    const T* pb = at(b).val.data();
    T* y = n.val.data();
    for (int64_t i = 0, m = n.val.numel(); i < m; ++i) y[i] = pa[i] * pb[i];
    return push(std::move(n));
  }

  int scale(int a, T c) {
    Node n;
    n.val = Tensor<T>(at(a).val.shape);
    n.op = Op::kScale;
    n.a = a;
    n.scalar = c;
    const T* pa = at(a).val.data();
    T* y = n.val.data();
    for (int64_t i = 0, m = n.val.numel(); i < m; ++i) y[i] = c * pa[i];
    return push(std::move(n));
  }

  int mean(int a) {
    Node n;
    n.val = Tensor<T>({1});
    n.op = Op::kMean;
    n.a = a;
    T acc = T(0);
    const T* pa = at(a).val.data();
    for (int64_t i = 0, m = at(a).val.numel(); i < m; ++i) acc += pa[i];
    n.val[0] = acc / static_cast<T>(at(a).val.numel());
    return push(std::move(n));
  }

  int reshape(int a, std::vector<int> shape) {
    Node n;
    n.val = at(a).val.reshaped(std::move(shape));
    n.op = Op::kReshape;
    n.a = a;
    return push(std::move(n));
  }

  int flatten(int a) { return reshape(a, {static_cast<int>(at(a).val.numel())}); }

  int concat(int a, int b) {
    if (at(a).val.shape.size() != 1 || at(b).val.shape.size() != 1)
      throw std::invalid_argument("concat: expects vectors");
    Node n;
    n.val = Tensor<T>({static_cast<int>(at(a).val.numel() + at(b).val.numel())});
    n.op = Op::kConcat;
    n.a = a;
    n.b = b;
    T* y = n.val.data();
    const T* pa = at(a).val.data();
    const T* pb = at(b).val.data();
    int64_t na = at(a).val.numel();
    for (int64_t i = 0; i < na; ++i) y[i] = pa[i];
    for (int64_t i = 0, nb = at(b).val.numel(); i < nb; ++i) y[na + i] = pb[i];
    return push(std::move(n));
  }

  int softmax(int a) {
    Node n;
    n.val = Tensor<T>(at(a).val.shape);
    n.op = Op::kSoftmax;
    n.a = a;
    softmax_into(at(a).val, n.val);
    return push(std::move(n));
  }

  // Numerically stable cross-entropy of softmax(logits) against a hard label.
  int softmax_xent(int logits, int label) {
    const int64_t k = at(logits).val.numel();
    if (label < 0 || label >= k) throw std::invalid_argument("softmax_xent: label out of range");
    Node n;
    n.val = Tensor<T>({1});
    n.op = Op::kSoftmaxXent;
    n.a = logits;
    n.label = label;
    n.aux = Tensor<T>({static_cast<int>(k)});
    softmax_into(at(logits).val, n.aux);
    const T* l = at(logits).val.data();
    T mx = l[0];
    for (int64_t i = 1; i < k; ++i) mx = std::max(mx, l[i]);
    T lse = T(0);
    for (int64_t i = 0; i < k; ++i) lse += std::exp(l[i] - mx);
    n.val[0] = std::log(lse) - (l[label] - mx);
    return push(std::move(n));
  }

  // Mean binary cross-entropy with probability clamping at kClampEps.
  int bce_mean(int pred, int target) {
    if (at(pred).val.numel() != at(target).val.numel())
      throw std::invalid_argument("bce_mean: size mismatch");
    Node n;
    n.val = Tensor<T>({1});
    n.op = Op::kBceMean;
    n.a = pred;
    n.b = target;
    const T* p = at(pred).val.data();
    const T* t = at(target).val.data();
    const int64_t m = at(pred).val.numel();
    T acc = T(0);
    for (int64_t i = 0; i < m; ++i) {
      const T pc = clamp_prob(p[i]);
      acc += -(t[i] * std::log(pc) + (T(1) - t[i]) * std::log(T(1) - pc));
    }
    n.val[0] = acc / static_cast<T>(m);
    return push(std::move(n));
  }

  // Anisotropic total variation of a CHW image, normalized by element count.
  int total_variation(int a) {
    const auto& s = at(a).val.shape;
    if (s.size() != 3) throw std::invalid_argument("total_variation: expects CHW");
    Node n;
    n.val = Tensor<T>({1});
    n.op = Op::kTotalVariation;
    n.a = a;
    const T* p = at(a).val.data();
    const int C = s[0], H = s[1], W = s[2];
    T acc = T(0);
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const T v = p[(static_cast<long>(c) * H + y) * W + x];
          if (x + 1 < W) acc += std::abs(p[(static_cast<long>(c) * H + y) * W + x + 1] - v);
          if (y + 1 < H) acc += std::abs(p[(static_cast<long>(c) * H + y + 1) * W + x] - v);
        }
    n.val[0] = acc / static_cast<T>(at(a).val.numel());
    return push(std::move(n));
  }

  const Tensor<T>& value(int id) const { return at(id).val; }
  const Tensor<T>& grad(int id) const { return at(id).grad; }
  const Tensor<T>& softmax_probs(int xent_id) const { return at(xent_id).aux; }

  // Reverse pass from a scalar node; seed scales the whole gradient.
  void backward(int loss, T seed = T(1)) {
    if (at(loss).val.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    ensure_grad(loss);
    at(loss).grad[0] += seed;
    for (int i = loss; i >= 0; --i) {
      Node& n = at(i);
      if (!n.needs_grad || n.grad.numel() == 0) continue;
      step_backward(n);
    }
  }

  size_t size() const { return nodes_.size(); }

  static constexpr T kClampEps = T(1e-7);

 private:
  std::vector<Node> nodes_;

  int push(Node&& n) {
    if (n.op != Op::kConstant && n.op != Op::kLeaf && n.op != Op::kParam) {
      bool g = n.a >= 0 && at(n.a).needs_grad;
      if (n.b >= 0) g = g || at(n.b).needs_grad;
      if (n.c >= 0) g = g || at(n.c).needs_grad;
      n.needs_grad = g;
    }
    validate_finite(n.val);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Node& at(int id) { return nodes_[id]; }
  const Node& at(int id) const { return nodes_[id]; }

  static T clamp_prob(T p) {
    return std::min(T(1) - kClampEps, std::max(kClampEps, p));
  }

  static void softmax_into(const Tensor<T>& logits, Tensor<T>& out) {
    const T* l = logits.data();
    const int64_t k = logits.numel();
    T mx = l[0];
    for (int64_t i = 1; i < k; ++i) mx = std::max(mx, l[i]);
    T sum = T(0);
    T* o = out.data();
    for (int64_t i = 0; i < k; ++i) {
      o[i] = std::exp(l[i] - mx);
      sum += o[i];
    }
    for (int64_t i = 0; i < k; ++i) o[i] /= sum;
  }

  static void validate_finite(const Tensor<T>& t) {
#ifdef REACHER_CHECK_FINITE
    for (int64_t i = 0; i < t.numel(); ++i)
      if (!std::isfinite(static_cast<double>(t[i]))) throw std::runtime_error("non-finite value");
#else
    (void)t;
#endif
  }

  T* ensure_grad(int id) {
    Node& n = at(id);
    if (n.grad.numel() == 0) n.grad = Tensor<T>(n.val.shape);
    return n.grad.data();
  }

  T* parent_grad(int id) { return at(id).needs_grad ? ensure_grad(id) : nullptr; }

  void step_backward(Node& n) {
    const T* dy = n.grad.data();
    switch (n.op) {
      case Op::kConstant:
      case Op::kLeaf:
      case Op::kParam:
        break;
      case Op::kConv2d: {
        T* dx = parent_grad(n.a);
        T* dw = parent_grad(n.b);
        T* db = parent_grad(n.c);
        kernels::conv2d_backward_omp(at(n.a).val.data(), at(n.b).val.data(), dy, dx, dw, db, n.conv);
        break;
      }
      case Op::kLinear: {
        T* dx = parent_grad(n.a);
        T* dw = parent_grad(n.b);
        T* db = parent_grad(n.c);
        kernels::linear_backward_omp(at(n.a).val.data(), at(n.b).val.data(), dy, dx, dw, db,
                                     at(n.b).val.shape[0], at(n.b).val.shape[1]);
        break;
      }
      case Op::kElu: {
        if (T* dx = parent_grad(n.a)) {
          const T* x = at(n.a).val.data();
          const T* y = n.val.data();
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i)
            dx[i] += dy[i] * (x[i] > T(0) ? T(1) : y[i] + T(1));
        }
        break;
      }
      case Op::kSigmoid: {
        if (T* dx = parent_grad(n.a)) {
          const T* y = n.val.data();
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
        }
        break;
      }
      case Op::kAdd: {
        if (T* da = parent_grad(n.a))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) da[i] += dy[i];
        if (T* db = parent_grad(n.b))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) db[i] += dy[i];
        break;
      }
      case Op::kMul: {
        const T* va = at(n.a).val.data();
        const T* vb = at(n.b).val.data();
        if (T* da = parent_grad(n.a))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) da[i] += dy[i] * vb[i];
        if (T* db = parent_grad(n.b))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) db[i] += dy[i] * va[i];
        break;
      }
      case Op::kScale: {
        if (T* da = parent_grad(n.a))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) da[i] += n.scalar * dy[i];
        break;
      }
      case Op::kMean: {
        if (T* da = parent_grad(n.a)) {
          const T g = dy[0] / static_cast<T>(at(n.a).val.numel());
          for (int64_t i = 0, m = at(n.a).val.numel(); i < m; ++i) da[i] += g;
        }
        break;
      }
      case Op::kReshape: {
        if (T* da = parent_grad(n.a))
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) da[i] += dy[i];
        break;
      }
      case Op::kConcat: {
        const int64_t na = at(n.a).val.numel();
        if (T* da = parent_grad(n.a))
          for (int64_t i = 0; i < na; ++i) da[i] += dy[i];
        if (T* db = parent_grad(n.b))
          for (int64_t i = 0, nb = at(n.b).val.numel(); i < nb; ++i) db[i] += dy[na + i];
        break;
      }
      case Op::kSoftmax: {
        if (T* da = parent_grad(n.a)) {
          const T* y = n.val.data();
          T dot = T(0);
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) dot += dy[i] * y[i];
          for (int64_t i = 0, m = n.val.numel(); i < m; ++i) da[i] += y[i] * (dy[i] - dot);
        }
        break;
      }
      case Op::kSoftmaxXent: {
        if (T* da = parent_grad(n.a)) {
          const T* p = n.aux.data();
          for (int64_t i = 0, m = n.aux.numel(); i < m; ++i)
            da[i] += dy[0] * (p[i] - (i == n.label ? T(1) : T(0)));
        }
        break;
      }
      case Op::kBceMean: {
        if (T* da = parent_grad(n.a)) {
          const T* p = at(n.a).val.data();
          const T* t = at(n.b).val.data();
          const int64_t m = at(n.a).val.numel();
          const T inv = dy[0] / static_cast<T>(m);
          for (int64_t i = 0; i < m; ++i) {
            if (p[i] <= kClampEps || p[i] >= T(1) - kClampEps) continue;  // clamped: flat
            da[i] += inv * (-t[i] / p[i] + (T(1) - t[i]) / (T(1) - p[i]));
          }
        }
        break;
      }
      case Op::kTotalVariation: {
        if (T* da = parent_grad(n.a)) {
          const T* p = at(n.a).val.data();
          const auto& s = at(n.a).val.shape;
          const int C = s[0], H = s[1], W = s[2];
          const T g = dy[0] / static_cast<T>(at(n.a).val.numel());
          auto idx = [&](int c, int y, int x) { return (static_cast<long>(c) * H + y) * W + x; };
          for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
              for (int x = 0; x < W; ++x) {
                const T v = p[idx(c, y, x)];
                if (x + 1 < W) {
                  const T d = p[idx(c, y, x + 1)] - v;
                  const T sg = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                  da[idx(c, y, x + 1)] += g * sg;
                  da[idx(c, y, x)] -= g * sg;
                }
                if (y + 1 < H) {
                  const T d = p[idx(c, y + 1, x)] - v;
                  const T sg = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                  da[idx(c, y + 1, x)] += g * sg;
                  da[idx(c, y, x)] -= g * sg;
                }
              }
        }
        break;
      }
    }
  }
};

template <class T>
struct AdamConfig {
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

template <class T>
struct AdamState {
  AdamConfig<T> cfg;
  long step = 0;
  std::vector<Tensor<T>> m, v;

  void init(const std::vector<Param<T>*>& params) {
    m.clear();
    v.clear();
    for (const Param<T>* p : params) {
      m.emplace_back(p->value.shape);
      v.emplace_back(p->value.shape);
    }
    step = 0;
  }
};

// Standard bias-corrected update from each param's accumulated gradient.
template <class T>
void adam_step(std::vector<Param<T>*>& params, AdamState<T>& st) {
  if (st.m.size() != params.size()) throw std::invalid_argument("adam_step: state mismatch");
  ++st.step;
  const T b1t = T(1) - std::pow(st.cfg.beta1, T(st.step));
  const T b2t = T(1) - std::pow(st.cfg.beta2, T(st.step));
  for (size_t k = 0; k < params.size(); ++k) {
    Param<T>& p = *params[k];
    T* m = st.m[k].data();
    T* v = st.v[k].data();
    T* w = p.value.data();
    const T* g = p.grad.data();
    for (int64_t i = 0, n = p.value.numel(); i < n; ++i) {
      m[i] = st.cfg.beta1 * m[i] + (T(1) - st.cfg.beta1) * g[i];
      v[i] = st.cfg.beta2 * v[i] + (T(1) - st.cfg.beta2) * g[i] * g[i];
      const T mhat = m[i] / b1t;
      const T vhat = v[i] / b2t;
      w[i] -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
    }
  }
}

template <class T>
void kaiming_uniform(Tensor<T>& t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (int64_t i = 0, n = t.numel(); i < n; ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// Central-difference gradient verification (double precision). Returns the
// max relative error |a - n| / max(1e-5, |a|, |n|) over all coordinates.
inline double grad_check(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x, const std::vector<double>& analytic,
                         double h = 1e-5) {
  if (x.size() != analytic.size()) throw std::invalid_argument("grad_check: size mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    const double num = (fp - fm) / (2 * h);
    const double err = std::abs(num - analytic[i]) / std::max({1e-5, std::abs(num), std::abs(analytic[i])});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace reacher::ad

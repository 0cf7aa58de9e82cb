#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace reacher {

// Dense tensor with shared storage; copies are shallow, clone() is deep.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<T>> store;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    store = std::make_shared<std::vector<T>>(numel_of(shape), T(0));
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t numel() const { return store ? static_cast<int64_t>(store->size()) : 0; }
  T* data() { return store->data(); }
  const T* data() const { return store->data(); }
  T& operator[](int64_t i) { return (*store)[i]; }
  const T& operator[](int64_t i) const { return (*store)[i]; }

  Tensor clone() const {
    Tensor out;
    out.shape = shape;
    out.store = std::make_shared<std::vector<T>>(*store);
    return out;
  }

  Tensor reshaped(std::vector<int> s) const {
    if (numel_of(s) != numel()) throw std::invalid_argument("reshape: element count mismatch");
    Tensor out;
    out.shape = std::move(s);
    out.store = store;
    return out;
  }

  void fill(T v) { std::fill(store->begin(), store->end(), v); }

  void add_(const Tensor& other) {
    if (other.numel() != numel()) throw std::invalid_argument("add_: size mismatch");
    T* a = data();
    const T* b = other.data();
    for (int64_t i = 0, n = numel(); i < n; ++i) a[i] += b[i];
  }
};

}  // namespace reacher

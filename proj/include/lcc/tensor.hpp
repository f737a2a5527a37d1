#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lcc/common.hpp"

namespace lcc {

// Dense NCHW tensor. T is float for training/inference and double for the
// gradient-check mode.
template <typename T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, T(0)) {}

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  T& at(int b, int ch, int y, int x) {
    return v[((size_t(b) * c + ch) * h + y) * w + x];
  }
  T at(int b, int ch, int y, int x) const {
    return v[((size_t(b) * c + ch) * h + y) * w + x];
  }

  T* plane(int b, int ch) { return v.data() + (size_t(b) * c + ch) * h * w; }
  const T* plane(int b, int ch) const { return v.data() + (size_t(b) * c + ch) * h * w; }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(n, c, h, w);
    for (size_t i = 0; i < v.size(); i++) out.v[i] = U(v[i]);
    return out;
  }
};

// Per-pixel class labels with a validity mask, batch-shaped to match a
// Tensor4 activation.
struct LabelGrid {
  int n = 0, h = 0, w = 0;
  std::vector<uint8_t> ids;
  std::vector<uint8_t> mask;  // 1 = contributes to the loss

  LabelGrid() = default;
  LabelGrid(int n_, int h_, int w_)
      : n(n_), h(h_), w(w_), ids(size_t(n_) * h_ * w_, 0), mask(size_t(n_) * h_ * w_, 1) {}

  size_t size() const { return ids.size(); }
  uint8_t& id_at(int b, int y, int x) { return ids[(size_t(b) * h + y) * w + x]; }
  uint8_t& mask_at(int b, int y, int x) { return mask[(size_t(b) * h + y) * w + x]; }
};

// Throws NonFiniteValue if any entry is NaN or infinite.
template <typename T>
void check_finite(const Tensor4<T>& t, const char* op_name);

}  // namespace lcc

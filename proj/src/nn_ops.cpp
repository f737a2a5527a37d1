#include "lcc/nn_ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace lcc {

namespace {

// BLAS must stay single-threaded; parallelism lives in our fixed block grid.
void blas_init_once() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    setenv("OPENBLAS_NUM_THREADS", "1", 1);
    if (openblas_set_num_threads) openblas_set_num_threads(1);
  });
}

void gemm_rm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
             const float* a, int lda, const float* b, int ldb, float beta, float* c,
             int ldc) {
  blas_init_once();
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb,
              beta, c, ldc);
}

void gemm_rm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
             const double* a, int lda, const double* b, int ldb, double beta,
             double* c, int ldc) {
  blas_init_once();
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb,
              beta, c, ldc);
}

int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// im2col for output rows [oy0, oy1) of sample b. Each kernel row r =
// (ci*k + ky)*k + kx starts at cols + r*row_stride + oy0*wo. Stride-1 rows
// are filled with memcpy plus zeroed padding margins.
template <typename T>
void im2col_rows(const Tensor4<T>& x, int b, int k, int stride, int pad, int oy0,
                 int oy1, int wo, T* cols, size_t row_stride) {
  const int h = x.h, w = x.w, cin = x.c;
  for (int ci = 0; ci < cin; ci++) {
    const T* src_plane = x.plane(b, ci);
    for (int ky = 0; ky < k; ky++) {
      for (int kx = 0; kx < k; kx++) {
        T* dst_row = cols + (size_t(ci) * k * k + size_t(ky) * k + kx) * row_stride;
        for (int oy = oy0; oy < oy1; oy++) {
          T* dst = dst_row + size_t(oy) * wo;
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* src = src_plane + size_t(iy) * w;
          if (stride == 1) {
            const int lo = std::max(0, pad - kx);
            const int hi = std::max(lo, std::min(wo, w + pad - kx));
            if (lo > 0) std::fill(dst, dst + lo, T(0));
            if (hi > lo)
              std::memcpy(dst + lo, src + lo + kx - pad, size_t(hi - lo) * sizeof(T));
            if (hi < wo) std::fill(dst + hi, dst + wo, T(0));
          } else {
            for (int ox = 0; ox < wo; ox++) {
              const int ix = ox * stride + kx - pad;
              dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// target output positions per GEMM work unit; fixed so the decomposition
// (and with it the float result) never depends on jobs()
constexpr int64_t kChunkPositions = 12288;

}  // namespace

template <typename T>
void check_finite(const Tensor4<T>& t, const char* op_name) {
  for (const T& v : t.v)
    if (!std::isfinite(v))
      throw Error(Err::NonFiniteValue, std::string(op_name) + " produced NaN/Inf");
}

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& w,
                          std::span<const T> bias, int stride, int pad) {
  const int cin = w.c, cout = w.n, k = w.h;
  if (w.w != k) throw Error(Err::ShapeMismatch, "non-square kernel");
  if (x.c != cin) throw Error(Err::ShapeMismatch, "conv input channel mismatch");
  if (int(bias.size()) != cout) throw Error(Err::ShapeMismatch, "bias size mismatch");
  const int ho = conv_out_size(x.h, k, stride, pad);
  const int wo = conv_out_size(x.w, k, stride, pad);
  if (ho < 1 || wo < 1) throw Error(Err::ShapeMismatch, "conv output would be empty");

  Tensor4<T> y(x.n, cout, ho, wo);
  const size_t out_plane = size_t(ho) * wo;
  const size_t in_plane = size_t(x.h) * x.w;
  const int kdim = cin * k * k;
  const bool direct_1x1 = (k == 1 && stride == 1 && pad == 0);

  const int chunk_rows = std::max(1, int(kChunkPositions / wo));
  const int nchunks = (ho + chunk_rows - 1) / chunk_rows;
  const int64_t total = int64_t(x.n) * nchunks;

#pragma omp parallel for schedule(static)
  for (int64_t unit = 0; unit < total; unit++) {
    const int b = int(unit / nchunks);
    const int chunk = int(unit % nchunks);
    const int oy0 = chunk * chunk_rows;
    const int oy1 = std::min(ho, oy0 + chunk_rows);
    const size_t npos = size_t(oy1 - oy0) * wo;
    const size_t pos0 = size_t(oy0) * wo;

    for (int co = 0; co < cout; co++) {
      T* dst = y.plane(b, co) + pos0;
      std::fill(dst, dst + npos, bias[size_t(co)]);
    }
    if (direct_1x1) {
      // the column matrix is the input itself
      gemm_rm(false, false, cout, int(npos), kdim, T(1), w.v.data(), kdim,
              x.plane(b, 0) + pos0, int(in_plane), T(1), y.plane(b, 0) + pos0,
              int(out_plane));
    } else {
      std::vector<T> cols(size_t(kdim) * npos);
      im2col_rows(x, b, k, stride, pad, oy0, oy1, wo, cols.data() - size_t(oy0) * wo, npos);
      gemm_rm(false, false, cout, int(npos), kdim, T(1), w.v.data(), kdim, cols.data(),
              int(npos), T(1), y.plane(b, 0) + pos0, int(out_plane));
    }
  }
  check_finite(y, "conv2d_forward");
  return y;
}

template <typename T>
void conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy,
                     int stride, int pad, Tensor4<T>* dx, Tensor4<T>& dw,
                     std::span<T> db) {
  const int cin = w.c, cout = w.n, k = w.h;
  const int ho = dy.h, wo = dy.w;
  if (dy.c != cout || dy.n != x.n)
    throw Error(Err::ShapeMismatch, "conv backward shape mismatch");
  if (conv_out_size(x.h, k, stride, pad) != ho ||
      conv_out_size(x.w, k, stride, pad) != wo)
    throw Error(Err::ShapeMismatch, "dy spatial shape inconsistent with input");
  if (int(db.size()) != cout) throw Error(Err::ShapeMismatch, "db size mismatch");

  if (!dw.same_shape(w)) dw = Tensor4<T>(w.n, w.c, w.h, w.w);
  dw.zero();
  std::fill(db.begin(), db.end(), T(0));
  if (dx) {
    if (!dx->same_shape(x)) *dx = Tensor4<T>(x.n, x.c, x.h, x.w);
    dx->zero();
  }

  const size_t npos = size_t(ho) * wo;
  const size_t in_plane = size_t(x.h) * x.w;
  const int kdim = cin * k * k;
  const bool direct_1x1 = (k == 1 && stride == 1 && pad == 0);

  // db: one output channel per work unit, serial accumulation inside
#pragma omp parallel for schedule(static)
  for (int co = 0; co < cout; co++) {
    T acc(0);
    for (int b = 0; b < dy.n; b++) {
      const T* p = dy.plane(b, co);
      for (size_t i = 0; i < npos; i++) acc += p[i];
    }
    db[size_t(co)] = acc;
  }

  // whole-sample cols buffer; the backward pass runs on training patches,
  // not full tiles, so this stays modest
  std::vector<T> cols;
  if (!direct_1x1) cols.resize(size_t(kdim) * npos);
  std::vector<T> dcols;
  if (!direct_1x1 && dx) dcols.resize(size_t(kdim) * npos);

  const int chunk_rows = std::max(1, int(kChunkPositions / wo));
  const int nchunks = (ho + chunk_rows - 1) / chunk_rows;
  constexpr int kMBlock = 32;

  for (int b = 0; b < x.n; b++) {
    const T* cols_ptr;
    if (direct_1x1) {
      cols_ptr = x.plane(b, 0);
    } else {
#pragma omp parallel for schedule(static)
      for (int chunk = 0; chunk < nchunks; chunk++) {
        const int oy0 = chunk * chunk_rows;
        const int oy1 = std::min(ho, oy0 + chunk_rows);
        im2col_rows(x, b, k, stride, pad, oy0, oy1, wo, cols.data(), npos);
      }
      cols_ptr = cols.data();
    }

    // dW += dY_b * cols_b^T over a fixed M-block grid; beta=1 keeps the
    // batch accumulation serial and ordered
    const int nmblocks = (cout + kMBlock - 1) / kMBlock;
#pragma omp parallel for schedule(static)
    for (int mb = 0; mb < nmblocks; mb++) {
      const int m0 = mb * kMBlock;
      const int m1 = std::min(cout, m0 + kMBlock);
      gemm_rm(false, true, m1 - m0, kdim, int(npos), T(1), dy.plane(b, m0), int(npos),
              cols_ptr, int(npos), T(1), dw.v.data() + size_t(m0) * kdim, kdim);
    }

    if (!dx) continue;

    const int64_t nblocks = (int64_t(npos) + kChunkPositions - 1) / kChunkPositions;
    if (direct_1x1) {
      // dx = W^T * dY directly, no col2im needed
#pragma omp parallel for schedule(static)
      for (int64_t nb = 0; nb < nblocks; nb++) {
        const size_t n0 = size_t(nb) * kChunkPositions;
        const size_t n1 = std::min(npos, n0 + size_t(kChunkPositions));
        gemm_rm(true, false, cin, int(n1 - n0), cout, T(1), w.v.data(), cin,
                dy.plane(b, 0) + n0, int(npos), T(0), dx->plane(b, 0) + n0,
                int(in_plane));
      }
      continue;
    }

    // dcols = W^T * dY
#pragma omp parallel for schedule(static)
    for (int64_t nb = 0; nb < nblocks; nb++) {
      const size_t n0 = size_t(nb) * kChunkPositions;
      const size_t n1 = std::min(npos, n0 + size_t(kChunkPositions));
      gemm_rm(true, false, kdim, int(n1 - n0), cout, T(1), w.v.data(), kdim,
              dy.plane(b, 0) + n0, int(npos), T(0), dcols.data() + n0, int(npos));
    }

    // col2im in gather form: every input element sums its own contributions
    // in a fixed (ky,kx) order, so threading over rows is exact
#pragma omp parallel for schedule(static)
    for (int64_t row = 0; row < int64_t(cin) * x.h; row++) {
      const int ci = int(row / x.h);
      const int iy = int(row % x.h);
      T* dst = dx->plane(b, ci) + size_t(iy) * x.w;
      for (int ky = 0; ky < k; ky++) {
        const int oy_num = iy + pad - ky;
        if (oy_num < 0 || oy_num % stride != 0) continue;
        const int oy = oy_num / stride;
        if (oy >= ho) continue;
        for (int kx = 0; kx < k; kx++) {
          const T* src_row = dcols.data() +
                             (size_t(ci) * k * k + size_t(ky) * k + kx) * npos +
                             size_t(oy) * wo;
          if (stride == 1) {
            const int lo = std::max(0, kx - pad);
            const int hi = std::min(x.w, wo + kx - pad);
            for (int ix = lo; ix < hi; ix++) dst[ix] += src_row[ix + pad - kx];
          } else {
            for (int ix = 0; ix < x.w; ix++) {
              const int ox_num = ix + pad - kx;
              if (ox_num < 0 || ox_num % stride != 0) continue;
              const int ox = ox_num / stride;
              if (ox < wo) dst[ix] += src_row[ox];
            }
          }
        }
      }
    }
  }
}

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x) {
  Tensor4<T> y(x.n, x.c, x.h, x.w);
  const int64_t n = int64_t(x.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; i++)
    y.v[size_t(i)] = x.v[size_t(i)] > T(0) ? x.v[size_t(i)] : T(0);
  return y;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& y, const Tensor4<T>& dy) {
  if (!y.same_shape(dy)) throw Error(Err::ShapeMismatch, "relu backward shape mismatch");
  Tensor4<T> dx(y.n, y.c, y.h, y.w);
  const int64_t n = int64_t(y.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; i++)
    dx.v[size_t(i)] = y.v[size_t(i)] > T(0) ? dy.v[size_t(i)] : T(0);
  return dx;
}

template <typename T>
Tensor4<T> upsample2_forward(const Tensor4<T>& x) {
  Tensor4<T> y(x.n, x.c, x.h * 2, x.w * 2);
#pragma omp parallel for schedule(static)
  for (int64_t pc = 0; pc < int64_t(x.n) * x.c; pc++) {
    const T* src = x.v.data() + size_t(pc) * x.h * x.w;
    T* dst = y.v.data() + size_t(pc) * y.h * y.w;
    for (int iy = 0; iy < x.h; iy++)
      for (int r = 0; r < 2; r++) {
        T* drow = dst + (size_t(iy) * 2 + r) * y.w;
        const T* srow = src + size_t(iy) * x.w;
        for (int ix = 0; ix < x.w; ix++) {
          drow[ix * 2] = srow[ix];
          drow[ix * 2 + 1] = srow[ix];
        }
      }
  }
  return y;
}

template <typename T>
Tensor4<T> upsample2_backward(const Tensor4<T>& dy) {
  if (dy.h % 2 != 0 || dy.w % 2 != 0)
    throw Error(Err::ShapeMismatch, "upsample2 backward needs even dims");
  Tensor4<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
#pragma omp parallel for schedule(static)
  for (int64_t pc = 0; pc < int64_t(dy.n) * dy.c; pc++) {
    const T* src = dy.v.data() + size_t(pc) * dy.h * dy.w;
    T* dst = dx.v.data() + size_t(pc) * dx.h * dx.w;
    for (int iy = 0; iy < dx.h; iy++) {
      T* drow = dst + size_t(iy) * dx.w;
      const T* r0 = src + size_t(iy) * 2 * dy.w;
      const T* r1 = r0 + dy.w;
      for (int ix = 0; ix < dx.w; ix++)
        drow[ix] = r0[ix * 2] + r0[ix * 2 + 1] + r1[ix * 2] + r1[ix * 2 + 1];
    }
  }
  return dx;
}

template <typename T>
Tensor4<T> softmax_channels(const Tensor4<T>& logits) {
  Tensor4<T> p(logits.n, logits.c, logits.h, logits.w);
  const int nc = logits.c;
  const size_t plane = size_t(logits.h) * logits.w;
  const int64_t rows = int64_t(logits.n) * logits.h;
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; row++) {
    const int b = int(row / logits.h);
    const int y = int(row % logits.h);
    const size_t base = size_t(b) * nc * plane + size_t(y) * logits.w;
    for (int x = 0; x < logits.w; x++) {
      T m = logits.v[base + x];
      for (int c = 1; c < nc; c++) m = std::max(m, logits.v[base + size_t(c) * plane + x]);
      T sum(0);
      for (int c = 0; c < nc; c++) {
        T e = std::exp(logits.v[base + size_t(c) * plane + x] - m);
        p.v[base + size_t(c) * plane + x] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (int c = 0; c < nc; c++) p.v[base + size_t(c) * plane + x] *= inv;
    }
  }
  check_finite(p, "softmax_channels");
  return p;
}

template <typename T>
double softmax_ce_loss(const Tensor4<T>& logits, const LabelGrid& labels,
                       Tensor4<T>* dlogits) {
  if (logits.n != labels.n || logits.h != labels.h || logits.w != labels.w)
    throw Error(Err::ShapeMismatch, "labels do not match logits");
  const int nc = logits.c;
  const size_t plane = size_t(logits.h) * logits.w;

  int64_t valid = 0;
  for (uint8_t m : labels.mask) valid += m ? 1 : 0;
  if (valid == 0) throw Error(Err::EmptyMask, "no valid pixels under mask");

  for (size_t i = 0; i < labels.ids.size(); i++)
    if (labels.mask[i] && labels.ids[i] >= nc)
      throw Error(Err::InvalidClassId, "label id exceeds class count");

  if (dlogits) {
    if (!dlogits->same_shape(logits))
      *dlogits = Tensor4<T>(logits.n, nc, logits.h, logits.w);
    dlogits->zero();
  }

  const T inv_valid = T(1.0 / double(valid));
  const int64_t rows = int64_t(logits.n) * logits.h;
  std::vector<double> row_loss(size_t(rows), 0.0);

#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; row++) {
    const int b = int(row / logits.h);
    const int y = int(row % logits.h);
    const size_t base = size_t(b) * nc * plane + size_t(y) * logits.w;
    const size_t lbase = (size_t(b) * logits.h + y) * logits.w;
    double acc = 0.0;
    for (int x = 0; x < logits.w; x++) {
      if (!labels.mask[lbase + x]) continue;
      const int cls = labels.ids[lbase + x];
      T m = logits.v[base + x];
      for (int c = 1; c < nc; c++) m = std::max(m, logits.v[base + size_t(c) * plane + x]);
      T sum(0);
      for (int c = 0; c < nc; c++) sum += std::exp(logits.v[base + size_t(c) * plane + x] - m);
      const T logit_y = logits.v[base + size_t(cls) * plane + x];
      acc += -(double(logit_y) - double(m) - std::log(double(sum)));
      if (dlogits) {
        const T inv_sum = T(1) / sum;
        for (int c = 0; c < nc; c++) {
          T p = std::exp(logits.v[base + size_t(c) * plane + x] - m) * inv_sum;
          if (c == cls) p -= T(1);
          dlogits->v[base + size_t(c) * plane + x] = p * inv_valid;
        }
      }
    }
    row_loss[size_t(row)] = acc;
  }

  // serial reduction in fixed order
  double total = 0.0;
  for (double v : row_loss) total += v;
  return total / double(valid);
}

// explicit instantiations: float for training/inference, double for the
// gradient-check mode
template void check_finite<float>(const Tensor4<float>&, const char*);
template void check_finite<double>(const Tensor4<double>&, const char*);
template Tensor4<float> conv2d_forward<float>(const Tensor4<float>&, const Tensor4<float>&, std::span<const float>, int, int);
template Tensor4<double> conv2d_forward<double>(const Tensor4<double>&, const Tensor4<double>&, std::span<const double>, int, int);
template void conv2d_backward<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, int, int, Tensor4<float>*, Tensor4<float>&, std::span<float>);
template void conv2d_backward<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, int, int, Tensor4<double>*, Tensor4<double>&, std::span<double>);
template Tensor4<float> relu_forward<float>(const Tensor4<float>&);
template Tensor4<double> relu_forward<double>(const Tensor4<double>&);
template Tensor4<float> relu_backward<float>(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> relu_backward<double>(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> upsample2_forward<float>(const Tensor4<float>&);
template Tensor4<double> upsample2_forward<double>(const Tensor4<double>&);
template Tensor4<float> upsample2_backward<float>(const Tensor4<float>&);
template Tensor4<double> upsample2_backward<double>(const Tensor4<double>&);
template Tensor4<float> softmax_channels<float>(const Tensor4<float>&);
template Tensor4<double> softmax_channels<double>(const Tensor4<double>&);
template double softmax_ce_loss<float>(const Tensor4<float>&, const LabelGrid&, Tensor4<float>*);
template double softmax_ce_loss<double>(const Tensor4<double>&, const LabelGrid&, Tensor4<double>*);

}  // namespace lcc

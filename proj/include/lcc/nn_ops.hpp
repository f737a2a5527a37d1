#pragma once

#include <span>

#include "lcc/tensor.hpp"

namespace lcc {

// 2-D convolution primitives, float path backed by im2col + BLAS GEMM over a
// fixed column-block grid. The decomposition never depends on the thread
// count, so results are bit-identical for any jobs() setting.
//
// Weights are (out_ch, in_ch, k, k); "same" shapes come from pad = k/2 at
// stride 1. Output spatial size is (H + 2*pad - k)/stride + 1.

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& w,
                          std::span<const T> bias, int stride, int pad);

// Gradients w.r.t. input, weights and bias. dx may be null to skip the
// input gradient (first layer).
template <typename T>
void conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& w, const Tensor4<T>& dy,
                     int stride, int pad, Tensor4<T>* dx, Tensor4<T>& dw,
                     std::span<T> db);

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x);

// dx from the post-activation y (y > 0 iff pre-activation > 0).
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& y, const Tensor4<T>& dy);

// Nearest-neighbor 2x upsampling and its adjoint.
template <typename T>
Tensor4<T> upsample2_forward(const Tensor4<T>& x);

template <typename T>
Tensor4<T> upsample2_backward(const Tensor4<T>& dy);

// Channel-wise softmax per pixel.
template <typename T>
Tensor4<T> softmax_channels(const Tensor4<T>& logits);

// Masked mean softmax cross-entropy over per-pixel class labels.
// loss = mean over valid pixels of -log softmax(logits)[label];
// dlogits = (softmax - onehot) / n_valid on valid pixels, 0 elsewhere.
// Throws EmptyMask when no pixel is valid.
template <typename T>
double softmax_ce_loss(const Tensor4<T>& logits, const LabelGrid& labels,
                       Tensor4<T>* dlogits);

}  // namespace lcc

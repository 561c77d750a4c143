#pragma once

#include <optional>

#include "cistgcn/tensor.hpp"

namespace cistgcn {

enum class Padding { kSame, kValid };
enum class PoolKind { kMax, kAvg, kAttention };

namespace ops {

// Elementwise binary ops broadcast numpy-style (right-aligned, size-1 dims
// stretch); gradients are reduced back over broadcast axes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> scale(const Tensor<T>& x, T c);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T c);
template <typename T> Tensor<T> div_scalar(const Tensor<T>& x, T c);
template <typename T> Tensor<T> square(const Tensor<T>& x);
template <typename T> Tensor<T> sqrt(const Tensor<T>& x);  // grad guarded at 0
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> exp(const Tensor<T>& x);

// prelu: x>0 -> x, else alpha*x; the x==0 subgradient takes the alpha branch.
// alpha has one slope per channel along channel_axis (or a single shared slope).
template <typename T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& alpha, int channel_axis);

template <typename T> Tensor<T> softmax(const Tensor<T>& x, int axis);

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// Batched: a [N,m,k] x b [N,k,n] -> [N,m,n]
template <typename T> Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> transpose(const Tensor<T>& x, std::vector<int> perm);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis);
// Drops `axis`, keeping slice `index` of it.
template <typename T> Tensor<T> select(const Tensor<T>& x, int axis, int64_t index);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> sum(const Tensor<T>& x, int axis, bool keepdim);
template <typename T> Tensor<T> mean(const Tensor<T>& x, int axis, bool keepdim);
template <typename T> Tensor<T> max(const Tensor<T>& x, int axis, bool keepdim);

// x [C_in,L] or [N,C_in,L]; w [C_out, C_in/groups, K]; dilated cross-correlation.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                 int dilation, Padding padding, int groups = 1);

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, int dilation, Padding padding,
                 int groups = 1) {
    return conv1d(x, w, static_cast<const Tensor<T>*>(nullptr), dilation, padding, groups);
}

// Fused depthwise (dw [C,1,K]) + pointwise (pw [C_out,C,1]) convolution.
template <typename T>
Tensor<T> separable_conv(const Tensor<T>& x, const Tensor<T>& dw, const Tensor<T>& pw,
                         int dilation = 1, Padding padding = Padding::kSame);

// x [..., in] * W [out, in] + b [out] -> [..., out]
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias);

template <typename T> Tensor<T> pool(const Tensor<T>& x, int axis, PoolKind kind);
// Softmax-weighted average along `axis`; scores shaped like x without the
// channel extent (same shape as x reduced over no axis -- see ops.cpp).
template <typename T>
Tensor<T> attention_pool(const Tensor<T>& x, const Tensor<T>& scores, int axis);

// Composite helpers (built from primitives, so autodiff covers them).
template <typename T> Tensor<T> mean_all(const Tensor<T>& x);
template <typename T> Tensor<T> stddev_all(const Tensor<T>& x, T eps);

// Statistics normalization y = gamma * (x - mu) / sqrt(var + eps) + beta with
// per-channel gamma/beta along channel_axis. In training mode mu/var come from
// the current tensor and running stats are EMA-updated (no gradient through
// the update); in eval mode the running stats are used.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                     T momentum, T eps, int channel_axis);

// Split-flag variant: `use_batch_stats` picks the normalization source and
// `update_running` controls the EMA side effect independently, so layers can
// normalize by per-sample statistics at eval without mutating shared state.
template <typename T>
Tensor<T> batch_norm_ex(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        Tensor<T>& running_mean, Tensor<T>& running_var, bool use_batch_stats,
                        bool update_running, T momentum, T eps, int channel_axis);

void throw_if_nonfinite_f(const Tensor<float>& t, const char* op);
void throw_if_nonfinite_d(const Tensor<double>& t, const char* op);

}  // namespace ops
}  // namespace cistgcn

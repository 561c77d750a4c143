#pragma once

#include <functional>
#include <string>

#include "cistgcn/ops.hpp"
#include "cistgcn/rng.hpp"
#include "cistgcn/tensor.hpp"

namespace cistgcn::nn {

// Visits every state tensor with a canonical name; `trainable` is false for
// batch-norm running statistics. Traversal order is fixed and defines the
// checkpoint layout.
template <typename T>
using StateVisitor = std::function<void(const std::string& name, Tensor<T>& t, bool trainable)>;

template <typename T>
Tensor<T> kaiming_uniform(Rng& rng, Shape shape, int64_t fan_in);

template <typename T>
Tensor<T> identity_matrix(int64_t n);

template <typename T>
struct Linear {
    Tensor<T> weight;  // [out, in]
    Tensor<T> bias;    // [out]

    void init(Rng& rng, int64_t in, int64_t out, bool zero_init = false);
    Tensor<T> forward(const Tensor<T>& x) const { return ops::linear(x, weight, &bias); }
    void visit(const std::string& prefix, const StateVisitor<T>& v);
    int64_t param_count() const { return weight.numel() + bias.numel(); }
};

template <typename T>
struct Conv1d {
    Tensor<T> weight;  // [C_out, C_in/groups, K]
    Tensor<T> bias;    // [C_out]
    int dilation = 1;
    Padding padding = Padding::kSame;
    int groups = 1;

    void init(Rng& rng, int64_t c_in, int64_t c_out, int64_t k, int dilation_ = 1,
              Padding padding_ = Padding::kSame, int groups_ = 1);
    Tensor<T> forward(const Tensor<T>& x) const {
        return ops::conv1d(x, weight, &bias, dilation, padding, groups);
    }
    void visit(const std::string& prefix, const StateVisitor<T>& v);
    int64_t param_count() const { return weight.numel() + bias.numel(); }
};

template <typename T>
struct BatchNorm {
    Tensor<T> gamma, beta;
    Tensor<T> running_mean, running_var;
    T momentum = T(0.1);
    T eps = T(1e-5);

    void init(int64_t channels);
    // Channel axis inferred from rank: [N,C,L] -> 1, [C,...] -> 0. Layers
    // normalize by the current tensor statistics in both modes (stacked
    // bilinear blocks amplify any train/eval statistics mismatch); running
    // stats are EMA-tracked as training state only.
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        int axis = x.ndim() == 3 ? 1 : 0;
        return ops::batch_norm_ex(x, gamma, beta, running_mean, running_var,
                                  /*use_batch_stats=*/true, /*update_running=*/training,
                                  momentum, eps, axis);
    }
    void visit(const std::string& prefix, const StateVisitor<T>& v);
    int64_t param_count() const { return gamma.numel() + beta.numel(); }
};

template <typename T>
struct PRelu {
    Tensor<T> alpha;  // per-channel slope, init 0.25

    void init(int64_t channels);
    // axis < 0 infers the channel axis from rank: [N,C,L] -> 1, [C,...] -> 0
    Tensor<T> forward(const Tensor<T>& x, int axis = -1) const {
        if (axis < 0) axis = x.ndim() == 3 ? 1 : 0;
        return ops::prelu(x, alpha, axis);
    }
    void visit(const std::string& prefix, const StateVisitor<T>& v);
    int64_t param_count() const { return alpha.numel(); }
};

// Conv+BN+PReLU block
template <typename T>
struct ConvBlock {
    Conv1d<T> conv;
    BatchNorm<T> bn;
    PRelu<T> act;

    void init(Rng& rng, int64_t c_in, int64_t c_out, int64_t k, int dilation_ = 1,
              Padding padding_ = Padding::kSame, int groups_ = 1);
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        return act.forward(bn.forward(conv.forward(x), training));
    }
    void visit(const std::string& prefix, const StateVisitor<T>& v);
    int64_t param_count() const {
        return conv.param_count() + bn.param_count() + act.param_count();
    }
};

}  // namespace cistgcn::nn

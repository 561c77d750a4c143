#include "cistgcn/nn.hpp"

#include <cmath>

namespace cistgcn::nn {

template <typename T>
Tensor<T> kaiming_uniform(Rng& rng, Shape shape, int64_t fan_in) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<T> v(static_cast<size_t>(numel_of(shape)));
    for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
    auto t = Tensor<T>::from_vector(std::move(shape), std::move(v));
    t.set_requires_grad(true);
    return t;
}

template <typename T>
Tensor<T> identity_matrix(int64_t n) {
    std::vector<T> v(static_cast<size_t>(n * n), T(0));
    for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i * n + i)] = T(1);
    return Tensor<T>::from_vector({n, n}, std::move(v));
}

template <typename T>
void Linear<T>::init(Rng& rng, int64_t in, int64_t out, bool zero_init) {
    if (zero_init) {
        weight = Tensor<T>::zeros({out, in});
        weight.set_requires_grad(true);
    } else {
        weight = kaiming_uniform<T>(rng, {out, in}, in);
    }
    bias = Tensor<T>::zeros({out});
    bias.set_requires_grad(true);
}

template <typename T>
void Linear<T>::visit(const std::string& prefix, const StateVisitor<T>& v) {
    v(prefix + ".weight", weight, true);
    v(prefix + ".bias", bias, true);
}

template <typename T>
void Conv1d<T>::init(Rng& rng, int64_t c_in, int64_t c_out, int64_t k, int dilation_,
                     Padding padding_, int groups_) {
    dilation = dilation_;
    padding = padding_;
    groups = groups_;
    int64_t c_in_g = c_in / groups_;
    weight = kaiming_uniform<T>(rng, {c_out, c_in_g, k}, c_in_g * k);
    bias = Tensor<T>::zeros({c_out});
    bias.set_requires_grad(true);
}

template <typename T>
void Conv1d<T>::visit(const std::string& prefix, const StateVisitor<T>& v) {
    v(prefix + ".weight", weight, true);
    v(prefix + ".bias", bias, true);
}

template <typename T>
void BatchNorm<T>::init(int64_t channels) {
    gamma = Tensor<T>::full({channels}, T(1));
    gamma.set_requires_grad(true);
    beta = Tensor<T>::zeros({channels});
    beta.set_requires_grad(true);
    running_mean = Tensor<T>::zeros({channels});
    running_var = Tensor<T>::full({channels}, T(1));
}

template <typename T>
void BatchNorm<T>::visit(const std::string& prefix, const StateVisitor<T>& v) {
    v(prefix + ".gamma", gamma, true);
    v(prefix + ".beta", beta, true);
    v(prefix + ".running_mean", running_mean, false);
    v(prefix + ".running_var", running_var, false);
}

template <typename T>
void PRelu<T>::init(int64_t channels) {
    alpha = Tensor<T>::full({channels}, T(0.25));
    alpha.set_requires_grad(true);
}

template <typename T>
void PRelu<T>::visit(const std::string& prefix, const StateVisitor<T>& v) {
    v(prefix + ".alpha", alpha, true);
}

template <typename T>
void ConvBlock<T>::init(Rng& rng, int64_t c_in, int64_t c_out, int64_t k, int dilation_,
                        Padding padding_, int groups_) {
    conv.init(rng, c_in, c_out, k, dilation_, padding_, groups_);
    bn.init(c_out);
    act.init(c_out);
}

template <typename T>
void ConvBlock<T>::visit(const std::string& prefix, const StateVisitor<T>& v) {
    conv.visit(prefix + ".conv", v);
    bn.visit(prefix + ".bn", v);
    act.visit(prefix + ".prelu", v);
}

#define CISTGCN_NN_INSTANTIATE(T)                                      \
    template Tensor<T> kaiming_uniform<T>(Rng&, Shape, int64_t);       \
    template Tensor<T> identity_matrix<T>(int64_t);                    \
    template struct Linear<T>;                                         \
    template struct Conv1d<T>;                                         \
    template struct BatchNorm<T>;                                      \
    template struct PRelu<T>;                                          \
    template struct ConvBlock<T>;

CISTGCN_NN_INSTANTIATE(float)
CISTGCN_NN_INSTANTIATE(double)

#undef CISTGCN_NN_INSTANTIATE

}  // namespace cistgcn::nn

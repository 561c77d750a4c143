#include "cistgcn/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "cistgcn/training.hpp"

namespace cistgcn::gradcheck {

namespace {

template <typename T>
std::vector<std::vector<T>> tape_gradients(const std::function<Tensor<T>()>& forward,
                                           std::vector<Tensor<T>>& inputs) {
    for (auto& t : inputs) t.zero_grad();
    {
        Tape<T> tape;
        typename Tape<T>::Scope scope(tape);
        Tensor<T> loss = forward();
        tape.backward(loss);
    }
    std::vector<std::vector<T>> out;
    for (auto& t : inputs) {
        if (t.has_grad())
            out.emplace_back(t.grad().begin(), t.grad().end());
        else
            out.emplace_back(static_cast<size_t>(t.numel()), T(0));
        t.zero_grad();
    }
    return out;
}

// Central differences with the contract step h = cbrt(machine eps)*max(1,|x|);
// eps is that of the evaluation dtype T.
template <typename T>
std::vector<double> fd_gradient_one(const std::function<Tensor<T>()>& forward, Tensor<T>& input,
                                    const std::vector<int64_t>& elems) {
    const double heps = std::cbrt(static_cast<double>(std::numeric_limits<T>::epsilon()));
    auto vals = input.raw_values();
    std::vector<double> out;
    out.reserve(elems.size());
    for (int64_t k : elems) {
        T orig = vals[k];
        T h = static_cast<T>(heps * std::max(1.0, std::abs(static_cast<double>(orig))));
        vals[k] = orig + h;
        double f1 = static_cast<double>(forward().item());
        vals[k] = orig - h;
        double f0 = static_cast<double>(forward().item());
        vals[k] = orig;
        out.push_back((f1 - f0) / (2.0 * static_cast<double>(h)));
    }
    return out;
}

double rel_err(double ad, double fd) {
    return std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
}

}  // namespace

template <typename T>
double check_closure(const std::function<Tensor<T>()>& forward, std::vector<Tensor<T>> inputs,
                     int64_t max_per_input, uint64_t seed) {
    std::vector<std::vector<T>> analytic = tape_gradients<T>(forward, inputs);
    Rng rng(Rng::derive(seed, 0x6664ULL));
    double worst = 0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        std::vector<int64_t> elems;
        if (max_per_input < 0 || inputs[i].numel() <= max_per_input) {
            elems.resize(static_cast<size_t>(inputs[i].numel()));
            for (size_t k = 0; k < elems.size(); ++k) elems[k] = static_cast<int64_t>(k);
        } else {
            for (int64_t k = 0; k < max_per_input; ++k)
                elems.push_back(rng.uniform_int(inputs[i].numel()));
        }
        std::vector<double> fd = fd_gradient_one<T>(forward, inputs[i], elems);
        for (size_t k = 0; k < elems.size(); ++k)
            worst = std::max(worst,
                             rel_err(static_cast<double>(
                                         analytic[i][static_cast<size_t>(elems[k])]),
                                     fd[k]));
    }
    return worst;
}

namespace {

template <typename U>
Tensor<U> cast_tensor(const Tensor<double>& t, bool grad) {
    std::vector<U> v(t.values().begin(), t.values().end());
    auto out = Tensor<U>::from_vector(t.shape(), std::move(v));
    out.set_requires_grad(grad);
    return out;
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double lo, double hi) {
    std::vector<T> v(static_cast<size_t>(numel_of(shape)));
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return Tensor<T>::from_vector(std::move(shape), std::move(v));
}

// Values bounded away from zero, for kinked ops (prelu) and denominators.
template <typename T>
Tensor<T> random_signed(Rng& rng, Shape shape) {
    std::vector<T> v(static_cast<size_t>(numel_of(shape)));
    for (auto& x : v) {
        double m = rng.uniform(0.3, 1.5);
        x = static_cast<T>(rng.uniform() < 0.5 ? -m : m);
    }
    return Tensor<T>::from_vector(std::move(shape), std::move(v));
}

// Checks the analytic gradient of `op` instantiated at dtype T against f64
// central differences at the same points; loss is mean(out * W) with fixed
// random W so the scalarization is well-scaled.
template <typename T, typename OpFn>
double check_op_mixed(OpFn&& op, const std::vector<Tensor<double>>& inputs_d, Rng& rng) {
    std::vector<Tensor<double>> ins_d;
    for (const auto& t : inputs_d) ins_d.push_back(cast_tensor<double>(t, true));
    Tensor<double> probe = op(ins_d);
    Tensor<double> w_d = random_tensor<double>(rng, probe.shape(), -1.0, 1.0);
    double inv_n = 1.0 / static_cast<double>(probe.numel());

    auto loss_d = [&]() {
        return ops::scale(ops::sum(ops::mul(op(ins_d), w_d)), inv_n);
    };

    std::vector<Tensor<T>> ins_t;
    for (const auto& t : inputs_d) ins_t.push_back(cast_tensor<T>(t, true));
    Tensor<T> w_t = cast_tensor<T>(w_d, false);
    std::function<Tensor<T>()> loss_t = [&]() {
        return ops::scale(ops::sum(ops::mul(op(ins_t), w_t)), static_cast<T>(inv_n));
    };

    std::vector<std::vector<T>> analytic = tape_gradients<T>(loss_t, ins_t);
    double worst = 0;
    std::function<Tensor<double>()> loss_d_fn = loss_d;
    for (size_t i = 0; i < ins_d.size(); ++i) {
        std::vector<int64_t> elems(static_cast<size_t>(ins_d[i].numel()));
        for (size_t k = 0; k < elems.size(); ++k) elems[k] = static_cast<int64_t>(k);
        std::vector<double> fd = fd_gradient_one<double>(loss_d_fn, ins_d[i], elems);
        for (size_t k = 0; k < elems.size(); ++k)
            worst =
                std::max(worst, rel_err(static_cast<double>(analytic[i][k]), fd[k]));
    }
    return worst;
}

}  // namespace

template <typename T>
Report run_op_suite(int n_shapes, double tolerance, uint64_t seed) {
    Report report;
    auto add = [&](const std::string& name, double err) {
        report.checks.push_back({name, err, tolerance});
    };

    for (int s = 0; s < n_shapes; ++s) {
        Rng rng(Rng::derive(seed, 0x6f7073ULL, static_cast<uint64_t>(s)));
        int64_t m = 2 + rng.uniform_int(4);
        int64_t k = 2 + rng.uniform_int(4);
        int64_t n = 2 + rng.uniform_int(4);
        std::string tag = "#" + std::to_string(s);

        auto x_mk = random_tensor<double>(rng, {m, k}, -1, 1);
        auto y_m1 = random_tensor<double>(rng, {m, 1}, -1, 1);

        add("add" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::add(in[0], in[1]);
                             },
                             {x_mk, y_m1}, rng));
        add("sub" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::sub(in[0], in[1]);
                             },
                             {x_mk, y_m1}, rng));
        add("mul" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::mul(in[0], in[1]);
                             },
                             {x_mk, y_m1}, rng));
        add("div" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::div(in[0], in[1]);
                             },
                             {x_mk, random_signed<double>(rng, {m, k})}, rng));
        add("scale" + tag, check_op_mixed<T>(
                               []<typename U>(const std::vector<Tensor<U>>& in) {
                                   return ops::scale(in[0], U(1.7));
                               },
                               {x_mk}, rng));
        add("add_scalar" + tag, check_op_mixed<T>(
                                    []<typename U>(const std::vector<Tensor<U>>& in) {
                                        return ops::add_scalar(in[0], U(0.3));
                                    },
                                    {x_mk}, rng));
        add("div_scalar" + tag, check_op_mixed<T>(
                                    []<typename U>(const std::vector<Tensor<U>>& in) {
                                        return ops::div_scalar(in[0], U(2.5));
                                    },
                                    {x_mk}, rng));
        add("square" + tag, check_op_mixed<T>(
                                []<typename U>(const std::vector<Tensor<U>>& in) {
                                    return ops::square(in[0]);
                                },
                                {x_mk}, rng));
        add("sqrt" + tag, check_op_mixed<T>(
                              []<typename U>(const std::vector<Tensor<U>>& in) {
                                  return ops::sqrt(in[0]);
                              },
                              {random_tensor<double>(rng, {m, k}, 0.5, 2.0)}, rng));
        add("sigmoid" + tag, check_op_mixed<T>(
                                 []<typename U>(const std::vector<Tensor<U>>& in) {
                                     return ops::sigmoid(in[0]);
                                 },
                                 {x_mk}, rng));
        add("tanh" + tag, check_op_mixed<T>(
                              []<typename U>(const std::vector<Tensor<U>>& in) {
                                  return ops::tanh(in[0]);
                              },
                              {x_mk}, rng));
        add("exp" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::exp(in[0]);
                             },
                             {x_mk}, rng));
        add("softmax" + tag, check_op_mixed<T>(
                                 []<typename U>(const std::vector<Tensor<U>>& in) {
                                     return ops::softmax(in[0], 1);
                                 },
                                 {x_mk}, rng));
        add("prelu" + tag, check_op_mixed<T>(
                               []<typename U>(const std::vector<Tensor<U>>& in) {
                                   return ops::prelu(in[0], in[1], 1);
                               },
                               {random_signed<double>(rng, {k, m, n}),
                                random_tensor<double>(rng, {m}, 0.1, 0.6)},
                               rng));
        add("sum_axis" + tag, check_op_mixed<T>(
                                  []<typename U>(const std::vector<Tensor<U>>& in) {
                                      return ops::sum(in[0], 0, false);
                                  },
                                  {x_mk}, rng));
        add("mean" + tag, check_op_mixed<T>(
                              []<typename U>(const std::vector<Tensor<U>>& in) {
                                  return ops::mean(in[0], 1, true);
                              },
                              {x_mk}, rng));
        add("max" + tag, check_op_mixed<T>(
                             []<typename U>(const std::vector<Tensor<U>>& in) {
                                 return ops::max(in[0], 1, false);
                             },
                             {x_mk}, rng));
        add("reshape" + tag, check_op_mixed<T>(
                                 [m, k]<typename U>(const std::vector<Tensor<U>>& in) {
                                     return ops::reshape(in[0], {k, m});
                                 },
                                 {x_mk}, rng));
        add("transpose" + tag, check_op_mixed<T>(
                                   []<typename U>(const std::vector<Tensor<U>>& in) {
                                       return ops::transpose(in[0], {1, 0});
                                   },
                                   {x_mk}, rng));
        add("select" + tag, check_op_mixed<T>(
                                [m]<typename U>(const std::vector<Tensor<U>>& in) {
                                    return ops::select(in[0], 0, m / 2);
                                },
                                {x_mk}, rng));
        add("concat" + tag, check_op_mixed<T>(
                                []<typename U>(const std::vector<Tensor<U>>& in) {
                                    std::vector<Tensor<U>> xs{in[0], in[1]};
                                    return ops::concat(xs, 1);
                                },
                                {x_mk, random_tensor<double>(rng, {m, k}, -1, 1)}, rng));
        add("pool_avg" + tag, check_op_mixed<T>(
                                  []<typename U>(const std::vector<Tensor<U>>& in) {
                                      return ops::pool(in[0], 1, PoolKind::kAvg);
                                  },
                                  {x_mk}, rng));
        add("pool_max" + tag, check_op_mixed<T>(
                                  []<typename U>(const std::vector<Tensor<U>>& in) {
                                      return ops::pool(in[0], 1, PoolKind::kMax);
                                  },
                                  {x_mk}, rng));
        add("matmul" + tag, check_op_mixed<T>(
                                []<typename U>(const std::vector<Tensor<U>>& in) {
                                    return ops::matmul(in[0], in[1]);
                                },
                                {x_mk, random_tensor<double>(rng, {k, n}, -1, 1)}, rng));
        {
            int64_t batch = 2 + rng.uniform_int(2);
            add("bmm" + tag, check_op_mixed<T>(
                                 []<typename U>(const std::vector<Tensor<U>>& in) {
                                     return ops::bmm(in[0], in[1]);
                                 },
                                 {random_tensor<double>(rng, {batch, m, k}, -1, 1),
                                  random_tensor<double>(rng, {batch, k, n}, -1, 1)},
                                 rng));
        }
        {
            int64_t cin = 2 + rng.uniform_int(3), cout = 2 + rng.uniform_int(3);
            int64_t len = 6 + rng.uniform_int(5);
            int dil = 1 + static_cast<int>(rng.uniform_int(2));
            auto xc = random_tensor<double>(rng, {cin, len}, -1, 1);
            auto wc = random_tensor<double>(rng, {cout, cin, 3}, -1, 1);
            auto bc = random_tensor<double>(rng, {cout}, -1, 1);
            add("conv1d_same" + tag,
                check_op_mixed<T>(
                    [dil]<typename U>(const std::vector<Tensor<U>>& in) {
                        return ops::conv1d(in[0], in[1], &in[2], dil, Padding::kSame, 1);
                    },
                    {xc, wc, bc}, rng));
            add("conv1d_valid" + tag,
                check_op_mixed<T>(
                    []<typename U>(const std::vector<Tensor<U>>& in) {
                        return ops::conv1d(in[0], in[1], &in[2], 1, Padding::kValid, 1);
                    },
                    {xc, wc, bc}, rng));
            add("conv1d_depthwise" + tag,
                check_op_mixed<T>(
                    [cin]<typename U>(const std::vector<Tensor<U>>& in) {
                        return ops::conv1d(in[0], in[1], 1, Padding::kSame,
                                           static_cast<int>(cin));
                    },
                    {random_tensor<double>(rng, {2, cin, len}, -1, 1),
                     random_tensor<double>(rng, {cin, 1, 3}, -1, 1)},
                    rng));
            add("separable_conv" + tag,
                check_op_mixed<T>(
                    []<typename U>(const std::vector<Tensor<U>>& in) {
                        return ops::separable_conv(in[0], in[1], in[2], 1, Padding::kSame);
                    },
                    {xc, random_tensor<double>(rng, {cin, 1, 3}, -1, 1),
                     random_tensor<double>(rng, {cout, cin, 1}, -1, 1)},
                    rng));
        }
        {
            int64_t out_dim = 2 + rng.uniform_int(3);
            add("linear" + tag, check_op_mixed<T>(
                                    []<typename U>(const std::vector<Tensor<U>>& in) {
                                        return ops::linear(in[0], in[1], &in[2]);
                                    },
                                    {random_tensor<double>(rng, {m, n, k}, -1, 1),
                                     random_tensor<double>(rng, {out_dim, k}, -1, 1),
                                     random_tensor<double>(rng, {out_dim}, -1, 1)},
                                    rng));
        }
        add("attention_pool" + tag,
            check_op_mixed<T>(
                []<typename U>(const std::vector<Tensor<U>>& in) {
                    return ops::attention_pool(in[0], in[1], 2);
                },
                {random_tensor<double>(rng, {m, k, n}, -1, 1),
                 random_tensor<double>(rng, {1, k, n}, -1, 1)},
                rng));
        {
            auto xb = random_tensor<double>(rng, {m, k, n}, -1, 1);
            auto gb = random_tensor<double>(rng, {m}, 0.5, 1.5);
            auto bb = random_tensor<double>(rng, {m}, -0.5, 0.5);
            add("batch_norm_train" + tag,
                check_op_mixed<T>(
                    [m]<typename U>(const std::vector<Tensor<U>>& in) {
                        Tensor<U> rm = Tensor<U>::zeros({m});
                        Tensor<U> rv = Tensor<U>::full({m}, U(1));
                        return ops::batch_norm(in[0], in[1], in[2], rm, rv, true, U(0.1),
                                               U(1e-5), 0);
                    },
                    {xb, gb, bb}, rng));
            add("batch_norm_eval" + tag,
                check_op_mixed<T>(
                    [m]<typename U>(const std::vector<Tensor<U>>& in) {
                        Tensor<U> rm = Tensor<U>::full({m}, U(0.2));
                        Tensor<U> rv = Tensor<U>::full({m}, U(1.5));
                        return ops::batch_norm(in[0], in[1], in[2], rm, rv, false, U(0.1),
                                               U(1e-5), 0);
                    },
                    {xb, gb, bb}, rng));
            add("stddev_all" + tag, check_op_mixed<T>(
                                        []<typename U>(const std::vector<Tensor<U>>& in) {
                                            return ops::stddev_all(in[0], U(1e-8));
                                        },
                                        {xb}, rng));
        }
        add("mpjpe" + tag, check_op_mixed<T>(
                               []<typename U>(const std::vector<Tensor<U>>& in) {
                                   return training::mpjpe_loss(in[0], in[1]);
                               },
                               {random_tensor<double>(rng, {m, k, 3}, -2, 2),
                                random_tensor<double>(rng, {m, k, 3}, -2, 2)},
                               rng));
    }
    return report;
}

Report run_model_check(const model::ModelConfig& cfg, int64_t n_params, double tolerance,
                       uint64_t seed) {
    auto m = model::CistGcn<double>::create_with_random_heads(cfg);
    Rng rng(Rng::derive(seed, 0x6d636bULL));
    std::vector<double> frames(static_cast<size_t>(cfg.t1 * cfg.joints * 3));
    for (auto& v : frames) v = rng.uniform(-400.0, 400.0);
    Tensor<double> feat = model::build_input_features<double>(frames, cfg.t1, cfg.joints);
    std::vector<double> lp(frames.end() - cfg.joints * 3, frames.end());
    Tensor<double> last_pose = Tensor<double>::from_vector({cfg.joints, 3}, lp);
    std::vector<double> tv(static_cast<size_t>(cfg.t2 * cfg.joints * 3));
    for (auto& v : tv) v = rng.uniform(-400.0, 400.0);
    Tensor<double> target = Tensor<double>::from_vector({cfg.t2, cfg.joints, 3}, tv);

    auto params = m.named_parameters();
    std::function<Tensor<double>()> forward = [&]() {
        auto res = m.forward(feat, last_pose, /*training=*/true);
        return training::mpjpe_loss(res.prediction, target);
    };

    int64_t per = std::max<int64_t>(1, n_params / static_cast<int64_t>(params.size()));
    std::vector<Tensor<double>> inputs;
    for (auto& [name, p] : params) {
        (void)name;
        inputs.push_back(p);
    }
    double err = check_closure<double>(forward, inputs, per, rng.next_u64());
    Report report;
    report.checks.push_back({"model_M" + std::to_string(cfg.channels), err, tolerance});
    return report;
}

bool run_full_verification(uint64_t seed) {
    bool ok = true;
    Report ops_report = run_op_suite<double>(3, 1e-7, seed);
    for (const auto& c : ops_report.checks) {
        std::printf("[%s] gradcheck op %-24s max rel err %.3e (tol %.0e)\n",
                    c.passed() ? "ok" : "FAIL", c.name.c_str(), c.max_rel_err, c.tolerance);
        ok = ok && c.passed();
    }
    model::ModelConfig cfg = model::ModelConfig::preset("M8");
    cfg.seed = seed;
    Report model_report = run_model_check(cfg, 100, 1e-3, seed);
    for (const auto& c : model_report.checks) {
        std::printf("[%s] gradcheck full %-22s max rel err %.3e (tol %.0e)\n",
                    c.passed() ? "ok" : "FAIL", c.name.c_str(), c.max_rel_err, c.tolerance);
        ok = ok && c.passed();
    }
    return ok;
}

template double check_closure<float>(const std::function<Tensor<float>()>&,
                                     std::vector<Tensor<float>>, int64_t, uint64_t);
template double check_closure<double>(const std::function<Tensor<double>()>&,
                                      std::vector<Tensor<double>>, int64_t, uint64_t);
template Report run_op_suite<float>(int, double, uint64_t);
template Report run_op_suite<double>(int, double, uint64_t);

}  // namespace cistgcn::gradcheck

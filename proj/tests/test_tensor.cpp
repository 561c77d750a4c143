#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cistgcn/binio.hpp"
#include "cistgcn/gradcheck.hpp"
#include "cistgcn/ops.hpp"
#include "test_util.hpp"

using namespace cistgcn;
using testutil::random_tensor;

TEST_CASE("matmul identity and hand arithmetic") {
    Rng rng(7);
    auto m = random_tensor<double>(rng, {3, 3});
    auto eye = Tensor<double>::from_vector({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto out = ops::matmul(eye, m);
    CHECK(testutil::max_abs_diff(out, m) == 0.0);

    auto a = Tensor<double>::from_vector({2, 2}, {1, 2, 3, 4});
    auto b = Tensor<double>::from_vector({2, 1}, {5, 6});
    auto c = ops::matmul(a, b);
    CHECK(c.at({0, 0}) == 17.0);
    CHECK(c.at({1, 0}) == 39.0);
}

TEST_CASE("matmul shape mismatch reports both shapes") {
    auto a = Tensor<float>::zeros({2, 3});
    auto b = Tensor<float>::zeros({4, 2});
    CHECK_THROWS_WITH_AS(ops::matmul(a, b), doctest::Contains("[2,3]"), ShapeError);
}

TEST_CASE("matmul gradient matches finite differences (4x5 * 5x3)") {
    Rng rng(11);
    auto a = random_tensor<double>(rng, {4, 5}, -1, 1, true);
    auto b = random_tensor<double>(rng, {5, 3}, -1, 1, true);
    auto w = random_tensor<double>(rng, {4, 3});
    auto fn = [&] { return ops::sum(ops::mul(ops::matmul(a, b), w)); };
    double err = gradcheck::check_closure<double>(fn, {a, b});
    CHECK(err < 1e-7);

    Rng rng2(11);
    auto af = random_tensor<float>(rng2, {4, 5}, -1, 1, true);
    auto bf = random_tensor<float>(rng2, {5, 3}, -1, 1, true);
    auto wf = random_tensor<float>(rng2, {4, 3});
    auto fnf = [&] { return ops::sum(ops::mul(ops::matmul(af, bf), wf)); };
    CHECK(gradcheck::check_closure<float>(fnf, {af, bf}) < 1e-4);
}

TEST_CASE("matmul broadcasts batch dimensions") {
    Rng rng(13);
    auto a = random_tensor<double>(rng, {3, 4, 5}, -1, 1, true);  // batch of 3
    auto b = random_tensor<double>(rng, {5, 2}, -1, 1, true);     // shared rhs
    auto out = ops::matmul(a, b);
    REQUIRE(out.shape() == Shape{3, 4, 2});
    for (int64_t i = 0; i < 3; ++i) {
        auto ai = ops::select(a, 0, i);
        auto ref = ops::matmul(ai, b);
        for (int64_t r = 0; r < 4; ++r)
            for (int64_t c = 0; c < 2; ++c)
                CHECK(out.at({i, r, c}) == doctest::Approx(ref.at({r, c})).epsilon(1e-12));
    }
    auto w = random_tensor<double>(rng, {3, 4, 2});
    auto fn = [&] { return ops::sum(ops::mul(ops::matmul(a, b), w)); };
    CHECK(gradcheck::check_closure<double>(fn, {a, b}) < 1e-7);
}

TEST_CASE("conv1d identity kernel and dilated hand case") {
    auto x = Tensor<double>::from_vector({1, 4}, {1, 2, 3, 4});
    auto w1 = Tensor<double>::from_vector({1, 1, 1}, {1});
    auto same = ops::conv1d(x, w1, 1, Padding::kSame, 1);
    CHECK(testutil::max_abs_diff(same, x) == 0.0);

    auto w = Tensor<double>::from_vector({1, 1, 2}, {1, 1});
    auto out = ops::conv1d(x, w, 2, Padding::kValid, 1);
    REQUIRE(out.shape() == Shape{1, 2});
    CHECK(out.at({0, 0}) == 4.0);  // 1 + 3
    CHECK(out.at({0, 1}) == 6.0);  // 2 + 4
}

TEST_CASE("conv1d rejects kernel span beyond input") {
    auto x = Tensor<double>::zeros({1, 4});
    auto w = Tensor<double>::zeros({1, 1, 3});
    CHECK_THROWS_AS(ops::conv1d(x, w, 2, Padding::kValid, 1), ShapeError);
}

TEST_CASE("separable_conv equals depthwise+pointwise composition") {
    Rng rng(23);
    int64_t C = 4, L = 9, Cout = 3;
    auto x = random_tensor<double>(rng, {C, L}, -1, 1, true);
    auto dw = random_tensor<double>(rng, {C, 1, 3}, -1, 1, true);
    auto pw = random_tensor<double>(rng, {Cout, C, 1}, -1, 1, true);
    auto fused = ops::separable_conv(x, dw, pw, 1, Padding::kSame);
    auto composed = ops::conv1d(ops::conv1d(x, dw, 1, Padding::kSame, static_cast<int>(C)), pw,
                                1, Padding::kSame, 1);
    CHECK(testutil::max_abs_diff(fused, composed) < 1e-12);

    auto wt = random_tensor<double>(rng, fused.shape());
    auto fn = [&] { return ops::sum(ops::mul(ops::separable_conv(x, dw, pw, 1, Padding::kSame), wt)); };
    CHECK(gradcheck::check_closure<double>(fn, {x, dw, pw}) < 1e-7);
}

TEST_CASE("separable_conv pointwise-only is a per-position linear map") {
    Rng rng(29);
    int64_t C = 3, L = 5, Cout = 2;
    auto x = random_tensor<double>(rng, {C, L});
    auto dw = Tensor<double>::full({C, 1, 1}, 1.0);  // scalar all-ones depthwise
    auto pw = random_tensor<double>(rng, {Cout, C, 1});
    auto out = ops::separable_conv(x, dw, pw, 1, Padding::kSame);
    for (int64_t l = 0; l < L; ++l)
        for (int64_t co = 0; co < Cout; ++co) {
            double expect = 0;
            for (int64_t c = 0; c < C; ++c) expect += pw.at({co, c, 0}) * x.at({c, l});
            CHECK(out.at({co, l}) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("batch_norm basic contracts") {
    // gamma=1, beta=0 on zero-mean unit-variance input: output ~ input
    std::vector<double> vals = {1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0};
    auto x = Tensor<double>::from_vector({2, 4}, vals);
    auto gamma = Tensor<double>::full({2}, 1.0);
    auto beta = Tensor<double>::zeros({2});
    auto rm = Tensor<double>::zeros({2});
    auto rv = Tensor<double>::full({2}, 1.0);
    auto y = ops::batch_norm(x, gamma, beta, rm, rv, true, 0.1, 1e-5, 0);
    CHECK(testutil::max_abs_diff(y, x) < 1e-5);

    // constant channel: output ~ beta, no division by zero
    auto xc = Tensor<double>::full({2, 4}, 3.25);
    auto beta2 = Tensor<double>::from_vector({2}, {0.5, -0.25});
    auto y2 = ops::batch_norm(xc, gamma, beta2, rm, rv, true, 0.1, 1e-5, 0);
    CHECK(y2.at({0, 0}) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(y2.at({1, 3}) == doctest::Approx(-0.25).epsilon(1e-9));
}

TEST_CASE("batch_norm gradient on 4x8 input") {
    Rng rng(31);
    auto x = random_tensor<double>(rng, {4, 8}, -2, 2, true);
    auto gamma = random_tensor<double>(rng, {4}, 0.5, 1.5, true);
    auto beta = random_tensor<double>(rng, {4}, -0.5, 0.5, true);
    auto rm = Tensor<double>::zeros({4});
    auto rv = Tensor<double>::full({4}, 1.0);
    auto w = random_tensor<double>(rng, {4, 8});
    auto fn = [&]() mutable {
        return ops::sum(
            ops::mul(ops::batch_norm(x, gamma, beta, rm, rv, true, 0.1, 1e-5, 0), w));
    };
    CHECK(gradcheck::check_closure<double>(fn, {x, gamma, beta}) < 1e-7);
}

TEST_CASE("prelu limits: relu at alpha=0, identity at alpha=1") {
    auto x = Tensor<double>::from_vector({4}, {-2, -0.5, 0.5, 2});
    auto a0 = Tensor<double>::zeros({1});
    auto y0 = ops::prelu(x, a0, 0);
    CHECK(y0.at({0}) == 0.0);
    CHECK(y0.at({1}) == 0.0);
    CHECK(y0.at({2}) == 0.5);
    auto a1 = Tensor<double>::full({1}, 1.0);
    CHECK(testutil::max_abs_diff(ops::prelu(x, a1, 0), x) == 0.0);
}

TEST_CASE("prelu gradient away from zero") {
    Rng rng(37);
    std::vector<double> vals;
    for (int i = 0; i < 12; ++i) {
        double m = rng.uniform(0.3, 1.5);
        vals.push_back(rng.uniform() < 0.5 ? -m : m);
    }
    auto x = Tensor<double>::from_vector({3, 4}, vals);
    x.set_requires_grad(true);
    auto alpha = random_tensor<double>(rng, {3}, 0.1, 0.5, true);
    auto w = random_tensor<double>(rng, {3, 4});
    auto fn = [&] { return ops::sum(ops::mul(ops::prelu(x, alpha, 0), w)); };
    CHECK(gradcheck::check_closure<double>(fn, {x, alpha}) < 1e-7);
}

TEST_CASE("pool avg/max and attention symmetry") {
    auto x = Tensor<double>::from_vector({1, 3}, {2, 4, 6});
    CHECK(ops::pool(x, 1, PoolKind::kAvg).at({0}) == 4.0);
    CHECK(ops::pool(x, 1, PoolKind::kMax).at({0}) == 6.0);

    Rng rng(41);
    auto y = random_tensor<double>(rng, {2, 5});
    auto uniform_scores = Tensor<double>::zeros({2, 5});
    auto attn = ops::attention_pool(y, uniform_scores, 1);
    auto avg = ops::pool(y, 1, PoolKind::kAvg);
    CHECK(testutil::max_abs_diff(attn, avg) < 1e-12);

    CHECK_THROWS_AS(ops::pool(y, 3, PoolKind::kAvg), ShapeError);
}

TEST_CASE("backward basics: sum and sum of squares") {
    auto x = Tensor<double>::from_vector({3}, {3, -1, 7});
    x.set_requires_grad(true);
    {
        Tape<double> tape;
        Tape<double>::Scope scope(tape);
        auto loss = ops::sum(x);
        tape.backward(loss);
    }
    for (double g : x.grad()) CHECK(g == 1.0);

    auto y = Tensor<double>::from_vector({2}, {1, 2});
    y.set_requires_grad(true);
    {
        Tape<double> tape;
        Tape<double>::Scope scope(tape);
        auto loss = ops::sum(ops::square(y));
        tape.backward(loss);
    }
    CHECK(y.grad()[0] == doctest::Approx(2.0));
    CHECK(y.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward rejects non-scalar loss and double invocation") {
    auto x = Tensor<double>::from_vector({2}, {1, 2});
    x.set_requires_grad(true);
    Tape<double> tape;
    Tape<double>::Scope scope(tape);
    auto y = ops::square(x);
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
    auto loss = ops::sum(y);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), NumericError);
    tape.clear();  // reset allows a fresh pass
    CHECK_FALSE(tape.frozen());
}

TEST_CASE("gradient accumulation is linear over losses") {
    Rng rng(43);
    auto make_x = [&] {
        Rng r(99);
        return random_tensor<double>(r, {3, 3}, -1, 1, true);
    };
    auto a = random_tensor<double>(rng, {3, 3});
    auto b = random_tensor<double>(rng, {3, 3});

    auto x1 = make_x();
    {
        Tape<double> tape;
        Tape<double>::Scope scope(tape);
        auto loss = ops::add(ops::sum(ops::mul(x1, a)), ops::sum(ops::mul(x1, b)));
        tape.backward(loss);
    }
    auto x2 = make_x();
    std::vector<double> g2(static_cast<size_t>(x2.numel()), 0.0);
    {
        Tape<double> tape;
        Tape<double>::Scope scope(tape);
        tape.backward(ops::sum(ops::mul(x2, a)));
        for (int64_t i = 0; i < x2.numel(); ++i) g2[static_cast<size_t>(i)] += x2.grad()[i];
    }
    x2.zero_grad();
    {
        Tape<double> tape;
        Tape<double>::Scope scope(tape);
        tape.backward(ops::sum(ops::mul(x2, b)));
        for (int64_t i = 0; i < x2.numel(); ++i) g2[static_cast<size_t>(i)] += x2.grad()[i];
    }
    for (int64_t i = 0; i < x1.numel(); ++i)
        CHECK(x1.grad()[i] == doctest::Approx(g2[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("reshape round-trip and transpose involution") {
    Rng rng(47);
    auto x = random_tensor<double>(rng, {3, 4, 5});
    auto rt = ops::reshape(ops::reshape(x, {60}), {3, 4, 5});
    CHECK(testutil::max_abs_diff(rt, x) == 0.0);
    auto tt = ops::transpose(ops::transpose(x, {2, 0, 1}), {1, 2, 0});
    CHECK(testutil::max_abs_diff(tt, x) == 0.0);
}

TEST_CASE("matmul associativity on well-conditioned f64 chains") {
    for (int trial = 0; trial < 5; ++trial) {
        Rng rng(100 + static_cast<uint64_t>(trial));
        auto a = random_tensor<double>(rng, {8, 8}, -1, 1);
        auto b = random_tensor<double>(rng, {8, 8}, -1, 1);
        auto c = random_tensor<double>(rng, {8, 8}, -1, 1);
        auto left = ops::matmul(ops::matmul(a, b), c);
        auto right = ops::matmul(a, ops::matmul(b, c));
        for (int64_t i = 0; i < left.numel(); ++i) {
            double l = left.values()[i], r = right.values()[i];
            CHECK(std::abs(l - r) / std::max(1.0, std::abs(l)) < 1e-10);
        }
    }
}

TEST_CASE("softmax is stabilized and normalized") {
    auto x = Tensor<double>::from_vector({3}, {1000.0, 1001.0, 999.0});
    auto y = ops::softmax(x, 0);
    double s = 0;
    for (double v : y.values()) {
        CHECK(std::isfinite(v));
        s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-finite op results raise NumericError") {
    auto x = Tensor<double>::from_vector({2}, {1e308, 1e308});
    CHECK_THROWS_AS(ops::add(x, x), NumericError);
    auto z = Tensor<double>::from_vector({2}, {-1.0, 4.0});
    CHECK_THROWS_AS(ops::sqrt(z), NumericError);
}

TEST_CASE("op suite: finite differences across 10 random shapes") {
    auto rep64 = gradcheck::run_op_suite<double>(10, 1e-7, 20260811);
    for (const auto& c : rep64.checks) {
        INFO(c.name, " err=", c.max_rel_err);
        CHECK(c.passed());
    }
    auto rep32 = gradcheck::run_op_suite<float>(10, 1e-4, 20260811);
    for (const auto& c : rep32.checks) {
        INFO(c.name, " err=", c.max_rel_err);
        CHECK(c.passed());
    }
}

TEST_CASE("TNSR dump round-trips shape and values") {
    Rng rng(53);
    auto x = random_tensor<double>(rng, {4, 6});
    std::string path = "/tmp/cistgcn_test_dump.tnsr";
    io::tnsr_write(path, x.shape(), std::vector<double>(x.values().begin(), x.values().end()));
    auto [shape, values] = io::tnsr_read(path);
    CHECK(shape == x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(values[static_cast<size_t>(i)] == x.values()[i]);

    auto xf = random_tensor<float>(rng, {2, 3, 5});
    io::tnsr_write(path, xf);
    auto [shape2, values2] = io::tnsr_read(path);
    CHECK(shape2 == xf.shape());
    for (int64_t i = 0; i < xf.numel(); ++i)
        CHECK(values2[static_cast<size_t>(i)] == doctest::Approx(xf.values()[i]));
}

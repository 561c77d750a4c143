#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cistgcn/binio.hpp"
#include "cistgcn/training.hpp"
#include "test_util.hpp"

using namespace cistgcn;
using testutil::random_tensor;
namespace fs = std::filesystem;

namespace {

std::string tmpdir() {
    auto d = fs::temp_directory_path() / "cistgcn_train_test";
    fs::create_directories(d);
    return d.string();
}

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

// brute-force Eq-4 oracle, scalar loops only
double mpjpe_naive(const std::vector<double>& pred, const std::vector<double>& target,
                   int64_t frames, int64_t joints) {
    double acc = 0;
    for (int64_t t = 0; t < frames; ++t)
        for (int64_t j = 0; j < joints; ++j) {
            double s = 0;
            for (int64_t d = 0; d < 3; ++d) {
                double diff = pred[(t * joints + j) * 3 + d] - target[(t * joints + j) * 3 + d];
                s += diff * diff;
            }
            acc += std::sqrt(s);
        }
    return acc / static_cast<double>(frames * joints);
}

std::vector<data::Sample> tiny_synth_samples(const std::string& split, int count_seqs,
                                             uint64_t seed) {
    std::vector<data::Sample> out;
    for (int i = 0; i < count_seqs; ++i) {
        auto cls = i % 2 == 0 ? data::SynthClass::kCyclic : data::SynthClass::kStatic;
        auto seq = data::synth_generate(cls, 36, 22, 25.0f, seed + static_cast<uint64_t>(i));
        seq.subject = split;
        auto w = data::window_split(seq, 10, 25, 25, i);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

}  // namespace

TEST_CASE("mpjpe: zero for identical tensors, exactly 5 for a 3-4-5 offset") {
    Rng rng(1);
    auto pred = random_tensor<double>(rng, {4, 6, 3}, -100, 100);
    CHECK(training::mpjpe_loss(pred, pred).item() == 0.0);

    auto target = pred.detached();
    std::vector<double> shifted(pred.values().begin(), pred.values().end());
    for (size_t i = 0; i < shifted.size(); i += 3) {
        shifted[i] += 3.0;
        shifted[i + 1] += 4.0;
    }
    auto moved = Tensor<double>::from_vector({4, 6, 3}, shifted);
    CHECK(training::mpjpe_loss(moved, target).item() == 5.0);  // exact
}

TEST_CASE("mpjpe: vectorized implementation equals the double-loop oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        int64_t t = 1 + rng.uniform_int(8), j = 2 + rng.uniform_int(10);
        auto pred = random_tensor<double>(rng, {t, j, 3}, -500, 500);
        auto target = random_tensor<double>(rng, {t, j, 3}, -500, 500);
        double got = training::mpjpe_loss(pred, target).item();
        double expect = mpjpe_naive({pred.values().begin(), pred.values().end()},
                                    {target.values().begin(), target.values().end()}, t, j);
        CHECK(std::abs(got - expect) < 1e-9);
    }
}

TEST_CASE("mpjpe: symmetric and triangle-compatible") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        auto a = random_tensor<double>(rng, {3, 5, 3}, -100, 100);
        auto b = random_tensor<double>(rng, {3, 5, 3}, -100, 100);
        auto c = random_tensor<double>(rng, {3, 5, 3}, -100, 100);
        double ab = training::mpjpe_loss(a, b).item();
        double ba = training::mpjpe_loss(b, a).item();
        CHECK(ab == ba);
        double ac = training::mpjpe_loss(a, c).item();
        double bc = training::mpjpe_loss(b, c).item();
        CHECK(ac <= ab + bc + 1e-12);
    }
}

TEST_CASE("mpjpe rejects shape mismatches") {
    auto a = Tensor<float>::zeros({2, 3, 3});
    auto b = Tensor<float>::zeros({2, 4, 3});
    CHECK_THROWS_AS(training::mpjpe_loss(a, b), ShapeError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Rng rng(4);
    std::vector<std::pair<std::string, Tensor<float>>> params;
    params.emplace_back("p", random_tensor<float>(rng, {4, 4}, -1, 1, true));
    auto before = std::vector<float>(params[0].second.values().begin(),
                                     params[0].second.values().end());
    training::AdamState st;
    st.init_like(params);
    params[0].second.grad_buffer();  // zero grad allocated
    training::adam_step(params, st, 1e-3, 0.9, 0.999, 1e-8);
    for (int64_t i = 0; i < params[0].second.numel(); ++i)
        CHECK(params[0].second.values()[i] == before[static_cast<size_t>(i)]);
}

TEST_CASE("adam: first-step magnitude is about lr") {
    std::vector<std::pair<std::string, Tensor<float>>> params;
    auto p = Tensor<float>::from_vector({3}, {1.0f, -2.0f, 0.5f});
    p.set_requires_grad(true);
    auto& g = p.grad_buffer();
    g[0] = 0.3f;
    g[1] = -4.0f;
    g[2] = 1e-3f;
    params.emplace_back("p", p);
    training::AdamState st;
    st.init_like(params);
    training::adam_step(params, st, 1e-3, 0.9, 0.999, 1e-8);
    CHECK(p.values()[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-4));
    CHECK(p.values()[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-4));
}

TEST_CASE("adam: matches an independent reference over 10 steps") {
    Rng rng(5);
    int64_t n = 12;
    std::vector<double> ref(static_cast<size_t>(n)), m(static_cast<size_t>(n), 0.0),
        v(static_cast<size_t>(n), 0.0);
    auto p = random_tensor<float>(rng, {n}, -1, 1, true);
    for (int64_t i = 0; i < n; ++i) ref[static_cast<size_t>(i)] = p.values()[i];
    std::vector<std::pair<std::string, Tensor<float>>> params;
    params.emplace_back("p", p);
    training::AdamState st;
    st.init_like(params);

    double lr = 2e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int step = 1; step <= 10; ++step) {
        std::vector<double> grad(static_cast<size_t>(n));
        for (auto& gv : grad) gv = rng.uniform(-1, 1);
        p.zero_grad();
        auto& g = p.grad_buffer();
        for (int64_t i = 0; i < n; ++i) g[i] = static_cast<float>(grad[static_cast<size_t>(i)]);
        training::adam_step(params, st, lr, b1, b2, eps);
        // reference update in f64
        for (int64_t i = 0; i < n; ++i) {
            size_t k = static_cast<size_t>(i);
            m[k] = b1 * m[k] + (1 - b1) * grad[k];
            v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
            double mh = m[k] / (1 - std::pow(b1, step));
            double vh = v[k] / (1 - std::pow(b2, step));
            ref[k] -= lr * mh / (std::sqrt(vh) + eps);
        }
        for (int64_t i = 0; i < n; ++i)
            CHECK(std::abs(p.values()[i] - ref[static_cast<size_t>(i)]) < 1e-7);
    }
}

TEST_CASE("gradient clipping rescales to the threshold") {
    std::vector<std::pair<std::string, Tensor<float>>> params;
    auto p = Tensor<float>::from_vector({2}, {0.f, 0.f});
    p.set_requires_grad(true);
    auto& g = p.grad_buffer();
    g[0] = 30.0f;
    g[1] = 40.0f;
    params.emplace_back("p", p);
    double norm = training::clip_grad_norm(params, 5.0);
    CHECK(norm == doctest::Approx(50.0));
    CHECK(p.grad()[0] == doctest::Approx(3.0f));
    CHECK(p.grad()[1] == doctest::Approx(4.0f));
}

TEST_CASE("checkpoint: save-load-save is byte-identical, with and without optimizer") {
    auto cfg = model::ModelConfig::preset("M8");
    cfg.seed = 77;
    auto m = model::CistGcn<float>::create_with_random_heads(cfg);
    training::CheckpointMeta meta;
    meta.model_cfg = cfg;
    meta.epoch = 3;
    meta.rng0 = 111;
    meta.rng1 = 222;
    std::string p1 = tmpdir() + "/a.ckpt", p2 = tmpdir() + "/b.ckpt";
    training::save_checkpoint(p1, m, nullptr, meta);
    auto loaded = training::load_checkpoint(p1);
    CHECK(loaded.meta.epoch == 3);
    CHECK(loaded.meta.rng0 == 111);
    CHECK_FALSE(loaded.has_opt);
    training::save_checkpoint(p2, loaded.model, nullptr, loaded.meta);
    CHECK(read_bytes(p1) == read_bytes(p2));

    training::AdamState st;
    auto params = m.named_parameters();
    st.init_like(params);
    st.step = 17;
    Rng rng(6);
    for (auto& t : st.m)
        for (auto& vv : t.raw_values()) vv = static_cast<float>(rng.uniform(-1, 1));
    training::save_checkpoint(p1, m, &st, meta);
    auto l2 = training::load_checkpoint(p1);
    REQUIRE(l2.has_opt);
    CHECK(l2.opt.step == 17);
    training::save_checkpoint(p2, l2.model, &l2.opt, l2.meta);
    CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("checkpoint: version and parameter-name mismatches are rejected") {
    auto cfg = model::ModelConfig::preset("M8");
    auto m = model::CistGcn<float>::create(cfg);
    training::CheckpointMeta meta;
    meta.model_cfg = cfg;
    std::string p = tmpdir() + "/v.ckpt";
    training::save_checkpoint(p, m, nullptr, meta);
    auto bytes = read_bytes(p);
    bytes[4] = 9;  // version field
    std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size()));
    CHECK_THROWS_WITH_AS(training::load_checkpoint(p), doctest::Contains("version"),
                         FormatError);
}

TEST_CASE("param_count equals enumerating trainable tensors from a checkpoint") {
    auto cfg = model::ModelConfig::preset("M16");
    auto m = model::CistGcn<float>::create(cfg);
    std::string p = tmpdir() + "/count.ckpt";
    training::CheckpointMeta meta;
    meta.model_cfg = cfg;
    training::save_checkpoint(p, m, nullptr, meta);

    // independent enumeration: walk the file format directly
    io::BinaryReader r(p);
    r.expect_magic("CIST", "checkpoint");
    r.u32();
    r.str_u32();
    uint32_t count = r.u32();
    int64_t total = 0;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = r.str_u32();
        uint32_t ndim = r.u32();
        int64_t numel = 1;
        for (uint32_t d = 0; d < ndim; ++d) numel *= r.u32();
        std::vector<float> vals(static_cast<size_t>(numel));
        r.bytes(vals.data(), vals.size() * sizeof(float));
        bool running_stat = name.find("running_") != std::string::npos;
        if (!running_stat) total += numel;
    }
    CHECK(total == m.param_count());
}

TEST_CASE("one training epoch is deterministic and reduces loss on easy data") {
    auto train = tiny_synth_samples("train", 16, 900);
    auto val = tiny_synth_samples("val", 4, 901);
    REQUIRE(!train.empty());

    auto cfg = model::ModelConfig::preset("M8");
    cfg.seed = 5;
    training::TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.seed = 5;
    tc.augmentation.rotation_max_deg = 0;

    auto run = [&](int epochs) {
        auto m = model::CistGcn<float>::create(cfg);
        training::Trainer tr(m, tc);
        double val0 = tr.validate(val);
        training::EpochReport last;
        for (int e = 0; e < epochs; ++e) last = tr.train_epoch(train, val, e);
        return std::make_tuple(val0, last.val_mpjpe, m);
    };
    auto [val0, val3, m1] = run(3);
    CHECK(val3 < val0);  // strict progress on the synthetic set

    // byte-level determinism of the epoch-1 checkpoint across fresh runs
    auto run_one = [&](const std::string& path) {
        auto m = model::CistGcn<float>::create(cfg);
        training::Trainer tr(m, tc);
        tr.train_epoch(train, val, 0);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = 1;
        training::save_checkpoint(path, m, &tr.optimizer(), meta);
    };
    std::string pa = tmpdir() + "/da.ckpt", pb = tmpdir() + "/db.ckpt";
    run_one(pa);
    run_one(pb);
    CHECK(read_bytes(pa) == read_bytes(pb));
}

TEST_CASE("resume reproduces the uninterrupted trajectory bit-exactly") {
    auto train = tiny_synth_samples("train", 12, 902);
    auto val = tiny_synth_samples("val", 3, 903);

    auto cfg = model::ModelConfig::preset("M8");
    cfg.seed = 9;
    training::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 9;

    // straight-through: 2 epochs
    std::string ps = tmpdir() + "/straight.ckpt";
    {
        auto m = model::CistGcn<float>::create(cfg);
        training::Trainer tr(m, tc);
        tr.train_epoch(train, val, 0);
        tr.train_epoch(train, val, 1);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = 2;
        training::save_checkpoint(ps, m, &tr.optimizer(), meta);
    }
    // interrupted: 1 epoch, checkpoint, reload, 1 more epoch
    std::string pm = tmpdir() + "/mid.ckpt", pr = tmpdir() + "/resumed.ckpt";
    {
        auto m = model::CistGcn<float>::create(cfg);
        training::Trainer tr(m, tc);
        tr.train_epoch(train, val, 0);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = 1;
        training::save_checkpoint(pm, m, &tr.optimizer(), meta);
    }
    {
        auto loaded = training::load_checkpoint(pm);
        training::Trainer tr(loaded.model, tc);
        tr.optimizer() = std::move(loaded.opt);
        tr.train_epoch(train, val, loaded.meta.epoch);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = 2;
        training::save_checkpoint(pr, loaded.model, &tr.optimizer(), meta);
    }
    CHECK(read_bytes(ps) == read_bytes(pr));
}

TEST_CASE("empty dataset and NaN provenance errors") {
    auto cfg = model::ModelConfig::preset("M8");
    auto m = model::CistGcn<float>::create(cfg);
    training::TrainConfig tc;
    training::Trainer tr(m, tc);
    CHECK_THROWS_AS(tr.train_epoch({}, {}, 0), FormatError);

    auto train = tiny_synth_samples("train", 2, 904);
    train[0].input[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_WITH_AS(tr.train_epoch(train, {}, 0), doctest::Contains("sample"),
                         NumericError);
}

TEST_CASE("lr schedule decays stepwise") {
    training::TrainConfig tc;
    tc.epochs = 30;
    tc.learning_rate = 1e-3;
    tc.lr_decay_factor = 0.5;
    tc.lr_decay_interval = 0;  // -> 10
    CHECK(tc.lr_at_epoch(0) == doctest::Approx(1e-3));
    CHECK(tc.lr_at_epoch(9) == doctest::Approx(1e-3));
    CHECK(tc.lr_at_epoch(10) == doctest::Approx(5e-4));
    CHECK(tc.lr_at_epoch(20) == doctest::Approx(2.5e-4));
}

// Acceptance suite: runs every gate criterion end-to-end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "cistgcn/evaluation.hpp"
#include "cistgcn/gradcheck.hpp"
#include "cistgcn/interpret.hpp"
#include "cistgcn/training.hpp"

using namespace cistgcn;
namespace fs = std::filesystem;

namespace {

constexpr uint64_t kSeed = 20260811;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

bool g_all_ok = true;

void report(int criterion, bool ok, const std::string& what, double seconds) {
    std::printf("[%s] criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion,
                what.c_str(), seconds);
    std::fflush(stdout);
    g_all_ok = g_all_ok && ok;
}

std::string tmpdir() {
    auto d = fs::temp_directory_path() / "cistgcn_acceptance";
    fs::create_directories(d);
    return d.string();
}

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

// The synthetic corpus for the trained-model criteria: 600 sequences over the
// three classes, 45 frames at 25 Hz, split 70/15/15 like cmd_synth.
struct SynthCorpus {
    std::vector<data::Sample> train, val, test;
};

SynthCorpus build_corpus(int64_t count, int64_t frames, int64_t stride, uint64_t seed) {
    SynthCorpus c;
    for (int64_t i = 0; i < count; ++i) {
        auto cls = static_cast<data::SynthClass>(i % 3);
        auto seq = data::synth_generate(cls, frames, 22, 25.0f,
                                        seed + static_cast<uint64_t>(i));
        seq.subject = "s" + std::to_string(1 + (i % 10));
        auto windows = data::window_split(seq, 10, 25, stride, i);
        int slot = static_cast<int>(i % 20);
        auto* dst = slot < 14 ? &c.train : (slot < 17 ? &c.val : &c.test);
        dst->insert(dst->end(), windows.begin(), windows.end());
    }
    return c;
}

training::TrainConfig train_recipe(bool rotation_augmentation) {
    training::TrainConfig tc;
    tc.epochs = 50;
    tc.batch_size = 16;
    tc.learning_rate = 3e-3;
    tc.seed = kSeed;
    tc.augmentation.rotation_max_deg = rotation_augmentation ? 360.0 : 0.0;
    tc.augmentation.noise_rate = 0.02;
    tc.augmentation.noise_sigma_mm = 25.0;
    tc.augmentation.scale_lo = 0.95;
    tc.augmentation.scale_hi = 1.05;
    tc.augmentation.translation_max_mm = 50.0;
    return tc;
}

model::ModelConfig m8_config() {
    auto cfg = model::ModelConfig::preset("M8");
    cfg.seed = kSeed;
    return cfg;
}

// criterion 1: gradient integrity
void criterion_gradcheck() {
    Timer t;
    bool ok = true;
    auto op_report = gradcheck::run_op_suite<double>(3, 1e-7, kSeed);
    double worst_op = op_report.worst();
    ok = ok && op_report.all_passed();
    auto model_report = gradcheck::run_model_check(m8_config(), 100, 1e-3, kSeed);
    ok = ok && model_report.all_passed();
    ok = ok && t.seconds() < 300.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient integrity: op-level worst %.2e (tol 1e-7), model worst %.2e (tol "
                  "1e-3), runtime < 5 min",
                  worst_op, model_report.worst());
    report(1, ok, buf, t.seconds());
}

// criterion 2: MPJPE oracle
void criterion_mpjpe_oracle() {
    Timer t;
    Rng rng(kSeed);
    bool ok = true;
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        int64_t frames = 1 + rng.uniform_int(12);
        int64_t joints = 2 + rng.uniform_int(30);
        std::vector<double> p(static_cast<size_t>(frames * joints * 3)),
            q(static_cast<size_t>(frames * joints * 3));
        for (auto& v : p) v = rng.uniform(-900, 900);
        for (auto& v : q) v = rng.uniform(-900, 900);
        double vec = training::mpjpe_loss(Tensor<double>::from_vector({frames, joints, 3}, p),
                                          Tensor<double>::from_vector({frames, joints, 3}, q))
                         .item();
        double acc = 0;
        for (int64_t i = 0; i < frames * joints; ++i) {
            double s = 0;
            for (int64_t d = 0; d < 3; ++d) {
                double diff = p[static_cast<size_t>(i * 3 + d)] - q[static_cast<size_t>(i * 3 + d)];
                s += diff * diff;
            }
            acc += std::sqrt(s);
        }
        acc /= static_cast<double>(frames * joints);
        worst = std::max(worst, std::abs(vec - acc));
    }
    ok = ok && worst < 1e-9;

    // 3-4-5 constant offset: exactly 5.0
    std::vector<double> base(5 * 7 * 3), moved(5 * 7 * 3);
    for (size_t i = 0; i < base.size(); ++i) base[i] = rng.uniform(-100, 100);
    for (size_t i = 0; i < base.size(); i += 3) {
        moved[i] = base[i] + 3.0;
        moved[i + 1] = base[i + 1] + 4.0;
        moved[i + 2] = base[i + 2];
    }
    double v345 = training::mpjpe_loss(Tensor<double>::from_vector({5, 7, 3}, moved),
                                       Tensor<double>::from_vector({5, 7, 3}, base))
                      .item();
    ok = ok && v345 == 5.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "MPJPE oracle: 1000 pairs worst |diff| %.2e (tol 1e-9), 3-4-5 case = %.17g",
                  worst, v345);
    report(2, ok, buf, t.seconds());
}

// criterion 3: residual baseline identity
void criterion_baseline_identity(const SynthCorpus& corpus) {
    Timer t;
    auto m = model::CistGcn<float>::create(m8_config());
    auto horizons = evaluation::default_horizons();
    auto mt = evaluation::evaluate_model(m, corpus.test, horizons, 25.0, {});
    auto bt = evaluation::zero_velocity_baseline(corpus.test, horizons, 25.0, {});
    double worst = 0;
    for (size_t r = 0; r < mt.rows.size(); ++r)
        for (size_t h = 0; h < horizons.size(); ++h)
            worst = std::max(worst, std::abs(mt.rows[r].mpjpe[h] - bt.rows[r].mpjpe[h]));
    bool ok = worst < 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "fresh model equals zero-velocity baseline, worst horizon diff %.2e (tol 1e-6)",
                  worst);
    report(3, ok, buf, t.seconds());
}

struct TrainedModels {
    model::CistGcn<float> with_rotation{};
    model::CistGcn<float> without_rotation{};
    double seconds_with = 0;
};

// criteria 4+5 share two training runs (one thread each)
TrainedModels run_trainings(const SynthCorpus& corpus) {
    TrainedModels out;
    auto train_one = [&corpus](bool rotation, model::CistGcn<float>* dst, double* secs) {
        Timer t;
        auto m = model::CistGcn<float>::create(m8_config());
        training::Trainer tr(m, train_recipe(rotation));
        for (int64_t e = 0; e < train_recipe(rotation).epochs; ++e)
            tr.train_epoch(corpus.train, {}, e);
        *dst = m;
        if (secs) *secs = t.seconds();
    };
    std::thread a(train_one, true, &out.with_rotation, &out.seconds_with);
    std::thread b(train_one, false, &out.without_rotation, nullptr);
    a.join();
    b.join();
    return out;
}

void criterion_training_progress(const SynthCorpus& corpus, TrainedModels& models) {
    Timer t;
    auto horizons = evaluation::default_horizons();
    auto model_table =
        evaluation::evaluate_model(models.with_rotation, corpus.test, horizons, 25.0, {});
    auto base_table = evaluation::zero_velocity_baseline(corpus.test, horizons, 25.0, {});
    double ratio = model_table.whole_window_mpjpe / base_table.whole_window_mpjpe;
    bool ok = ratio <= 0.6 && models.seconds_with < 900.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "training progress: trained %.1f mm vs baseline %.1f mm, ratio %.3f (gate "
                  "0.6), train time %.0fs (< 900s)",
                  model_table.whole_window_mpjpe, base_table.whole_window_mpjpe, ratio,
                  models.seconds_with);
    report(4, ok, buf, t.seconds());
}

void criterion_robustness(const SynthCorpus& corpus, TrainedModels& models) {
    Timer t;
    std::vector<double> grid = {0, 45, 90, 135, 180, 225, 270, 315};
    evaluation::EvalOptions opt;
    opt.seed = kSeed;
    auto sweep_ratio = [&](model::CistGcn<float>& m) {
        auto rep = evaluation::robustness_sweep(m, corpus.test,
                                                evaluation::SweepKind::kRotationY, grid, 25.0,
                                                opt);
        double lo = rep.mpjpe[0], hi = rep.mpjpe[0];
        for (double v : rep.mpjpe) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi / lo;
    };
    double with_ratio = sweep_ratio(models.with_rotation);
    double without_ratio = sweep_ratio(models.without_rotation);
    bool ok = without_ratio >= 1.5 * with_ratio;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "rotation robustness: max/min sweep ratio %.2f without augmentation vs %.2f "
                  "with (factor %.2f >= 1.5)",
                  without_ratio, with_ratio, without_ratio / std::max(1e-9, with_ratio));
    report(5, ok, buf, t.seconds());
}

void criterion_param_scaling() {
    Timer t;
    int64_t c8 = model::param_count(model::ModelConfig::preset("M8"));
    int64_t c16 = model::param_count(model::ModelConfig::preset("M16"));
    int64_t c32 = model::param_count(model::ModelConfig::preset("M32"));
    int64_t c64 = model::param_count(model::ModelConfig::preset("M64"));
    double ratio = static_cast<double>(c32) / static_cast<double>(c16);
    double rel = static_cast<double>(c32) / 345600.0;
    bool ok = c8 < c16 && c16 < c32 && c32 < c64 && ratio >= 1.8 && ratio <= 2.6 &&
              rel >= 1.0 / 3.0 && rel <= 3.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "parameter scaling: %lld < %lld < %lld < %lld, M32/M16 %.2f in [1.8,2.6], "
                  "M32 within 3x of 345.6K (%.2fx)",
                  static_cast<long long>(c8), static_cast<long long>(c16),
                  static_cast<long long>(c32), static_cast<long long>(c64), ratio, rel);
    report(6, ok, buf, t.seconds());
}

void criterion_interpretability(const SynthCorpus& corpus, TrainedModels& models) {
    Timer t;
    auto records = interpret::importance_table(models.with_rotation, corpus.test);
    auto imp = interpret::centroid_analysis(records);

    std::vector<std::string> labels;
    std::vector<std::vector<double>> raw;
    for (const auto& s : corpus.test) {
        labels.push_back(s.action);
        raw.emplace_back(s.input.begin(), s.input.end());
    }
    auto flat = interpret::centroid_analysis_vectors(labels, raw);

    bool ok = imp.separation.has_value() && flat.separation.has_value() &&
              *imp.separation > 0.0 && *imp.separation > *flat.separation;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "interpretability separation: importance score %.3f > 0 and > raw-pose score "
                  "%.3f",
                  imp.separation.value_or(-1), flat.separation.value_or(-1));
    report(7, ok, buf, t.seconds());
}

// Spec invariant (not a numbered criterion): for a trained model, normalized
// output-layer maps of a sample and its yaw-rotated copy are closer than maps
// of samples from a different action class, judged by medians over >= 50
// samples.
void invariant_transform_stability(const SynthCorpus& corpus, TrainedModels& models) {
    Timer t;
    Rng rng(kSeed + 17);
    auto map_distance = [](const model::Interpretation& a, const model::Interpretation& b) {
        double acc = 0;
        int n = 0;
        for (const char* layer : {"dsgn-out", "tsgn-out"}) {
            auto na = interpret::normalize_map(*a.find_map(layer));
            auto nb = interpret::normalize_map(*b.find_map(layer));
            double s = 0;
            for (size_t i = 0; i < na.values.size(); ++i) {
                double d = na.values[i] - nb.values[i];
                s += d * d;
            }
            acc += std::sqrt(s);
            ++n;
        }
        return acc / n;
    };
    std::vector<double> d_same, d_other;
    size_t count = std::min<size_t>(corpus.test.size(), 60);
    for (size_t i = 0; i < count; ++i) {
        const auto& s = corpus.test[i];
        auto original = interpret::extract_bundle(models.with_rotation, s);
        data::Sample rotated = s;
        auto c = data::last_input_centroid(rotated);
        double angle = rng.uniform(30.0, 330.0);
        data::rotate_y_about(rotated.input, rotated.joints, angle, c);
        data::rotate_y_about(rotated.target, rotated.joints, angle, c);
        auto twin = interpret::extract_bundle(models.with_rotation, rotated);
        d_same.push_back(map_distance(original.bundle, twin.bundle));
        // nearest following sample from a different action class
        for (size_t k = 1; k < corpus.test.size(); ++k) {
            const auto& o = corpus.test[(i + k) % corpus.test.size()];
            if (o.action == s.action) continue;
            auto other = interpret::extract_bundle(models.with_rotation, o);
            d_other.push_back(map_distance(original.bundle, other.bundle));
            break;
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    double ms = median(d_same), mo = median(d_other);
    bool ok = ms < mo;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "transform stability: median map distance to rotated copy %.3f < to other "
                  "class %.3f over %zu samples",
                  ms, mo, d_same.size());
    std::printf("[%s] invariant   : %s (%.1fs)\n", ok ? "PASS" : "FAIL", buf, t.seconds());
    std::fflush(stdout);
    g_all_ok = g_all_ok && ok;
}

void criterion_determinism() {
    Timer t;
    auto corpus = build_corpus(60, 45, 5, kSeed + 999);
    auto cfg = m8_config();
    auto tc = train_recipe(true);
    tc.epochs = 2;

    auto run_epochs = [&](int64_t upto, const std::string& path, const std::string* resume) {
        model::CistGcn<float> m =
            resume ? training::load_checkpoint(*resume).model : model::CistGcn<float>::create(cfg);
        training::Trainer tr(m, tc);
        int64_t start = 0;
        if (resume) {
            auto loaded = training::load_checkpoint(*resume);
            tr.optimizer() = std::move(loaded.opt);
            start = loaded.meta.epoch;
        }
        for (int64_t e = start; e < upto; ++e) tr.train_epoch(corpus.train, {}, e);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = upto;
        training::save_checkpoint(path, m, &tr.optimizer(), meta);
    };

    std::string dir = tmpdir();
    run_epochs(1, dir + "/det_a.ckpt", nullptr);
    run_epochs(1, dir + "/det_b.ckpt", nullptr);
    bool identical = read_bytes(dir + "/det_a.ckpt") == read_bytes(dir + "/det_b.ckpt");

    run_epochs(2, dir + "/straight.ckpt", nullptr);
    std::string mid = dir + "/det_a.ckpt";
    run_epochs(2, dir + "/resumed.ckpt", &mid);
    bool resume_exact = read_bytes(dir + "/straight.ckpt") == read_bytes(dir + "/resumed.ckpt");

    bool ok = identical && resume_exact;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "determinism: epoch-1 checkpoints byte-identical (%s), resume reproduces the "
                  "uninterrupted run (%s)",
                  identical ? "yes" : "no", resume_exact ? "yes" : "no");
    report(8, ok, buf, t.seconds());
}

void criterion_format_roundtrips() {
    Timer t;
    Rng rng(kSeed + 5);
    bool ok = true;
    std::string dir = tmpdir();
    for (int i = 0; i < 100 && ok; ++i) {
        data::PoseSequence seq;
        seq.joints = 2 + rng.uniform_int(30);
        seq.fps = static_cast<float>(rng.uniform(10, 60));
        seq.action = "a" + std::to_string(rng.uniform_int(1000));
        seq.subject = "s" + std::to_string(rng.uniform_int(1000));
        int64_t frames = 1 + rng.uniform_int(40);
        seq.frames.resize(static_cast<size_t>(frames * seq.joints * 3));
        for (auto& v : seq.frames) v = static_cast<float>(rng.uniform(-1000, 1000));
        std::string p1 = dir + "/rt.pseq", p2 = dir + "/rt2.pseq";
        data::save_pseq(seq, p1);
        data::save_pseq(data::load_pseq(p1), p2);
        ok = ok && read_bytes(p1) == read_bytes(p2);
    }
    bool pseq_ok = ok;

    bool ckpt_ok = true;
    for (int i = 0; i < 100 && ckpt_ok; ++i) {
        model::ModelConfig cfg;
        cfg.channels = rng.uniform_int(2) == 0 ? 8 : 16;
        cfg.joints = 4 + rng.uniform_int(12);
        cfg.t1 = 4 + rng.uniform_int(8);
        cfg.t2 = 4 + rng.uniform_int(8);
        cfg.encoder_depth = 1 + rng.uniform_int(3);
        cfg.seed = rng.next_u64();
        auto m = model::CistGcn<float>::create_with_random_heads(cfg);
        training::CheckpointMeta meta;
        meta.model_cfg = cfg;
        meta.epoch = rng.uniform_int(100);
        meta.rng0 = rng.next_u64();
        meta.rng1 = rng.next_u64();
        std::string p1 = dir + "/rt.ckpt", p2 = dir + "/rt2.ckpt";
        training::save_checkpoint(p1, m, nullptr, meta);
        auto loaded = training::load_checkpoint(p1);
        training::save_checkpoint(p2, loaded.model, nullptr, loaded.meta);
        ckpt_ok = ckpt_ok && read_bytes(p1) == read_bytes(p2);
    }
    ok = pseq_ok && ckpt_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "format round-trips: 100 PSEQ (%s) and 100 checkpoints (%s) byte-identical",
                  pseq_ok ? "ok" : "FAIL", ckpt_ok ? "ok" : "FAIL");
    report(9, ok, buf, t.seconds());
}

void criterion_horizon_mapping() {
    Timer t;
    std::vector<int> ms = {80, 160, 320, 400, 560, 720, 880, 1000};
    std::vector<int64_t> expect = {2, 4, 8, 10, 14, 18, 22, 25};
    bool ok = true;
    for (size_t i = 0; i < ms.size(); ++i)
        ok = ok && evaluation::horizon_frame_index(ms[i], 25.0) == expect[i];
    report(10, ok, "horizon mapping {80..1000} ms @ 25 Hz -> frames {2,4,8,10,14,18,22,25}",
           t.seconds());
}

}  // namespace

int main() {
    Timer total;
    std::printf("== acceptance suite ==\n");

    criterion_gradcheck();
    criterion_mpjpe_oracle();

    SynthCorpus corpus = build_corpus(600, 45, 5, kSeed);
    std::printf("-- corpus: %zu train / %zu val / %zu test windows\n", corpus.train.size(),
                corpus.val.size(), corpus.test.size());

    criterion_baseline_identity(corpus);

    std::printf("-- training paired M8 runs (50 epochs each, parallel)...\n");
    std::fflush(stdout);
    TrainedModels models = run_trainings(corpus);

    criterion_training_progress(corpus, models);
    criterion_robustness(corpus, models);
    criterion_param_scaling();
    criterion_interpretability(corpus, models);
    invariant_transform_stability(corpus, models);
    criterion_determinism();
    criterion_format_roundtrips();
    criterion_horizon_mapping();

    std::printf("== %s in %.1fs ==\n", g_all_ok ? "ALL CRITERIA PASSED" : "FAILURES PRESENT",
                total.seconds());
    return g_all_ok ? 0 : 1;
}

#include "cistgcn/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "cistgcn/binio.hpp"

namespace cistgcn::training {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
    if (!(lr_decay_factor > 0)) throw ConfigError("train.lr_decay_factor must be positive");
    if (stride < 1) throw ConfigError("train.stride must be >= 1");
    if (grad_clip < 0) throw ConfigError("train.grad_clip must be >= 0");
    augmentation.validate();
}

double TrainConfig::lr_at_epoch(int64_t epoch) const {
    int64_t interval = lr_decay_interval > 0 ? lr_decay_interval : std::max<int64_t>(1, epochs / 3);
    return learning_rate * std::pow(lr_decay_factor, static_cast<double>(epoch / interval));
}

template <typename T>
Tensor<T> mpjpe_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("mpjpe: shape mismatch " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    if (pred.ndim() != 3 || pred.dim(2) != 3)
        throw ShapeError("mpjpe: expected [T,J,3], got " + shape_str(pred.shape()));
    Tensor<T> d = ops::sub(pred, target);
    Tensor<T> s = ops::sum(ops::square(d), 2, false);  // [T,J]
    return ops::mean_all(ops::sqrt(s));
}

double mpjpe_value(std::span<const float> pred, std::span<const float> target, int64_t frames,
                   int64_t joints) {
    if (pred.size() != target.size() ||
        static_cast<int64_t>(pred.size()) != frames * joints * 3)
        throw ShapeError("mpjpe_value: buffer size mismatch");
    double acc = 0;
    for (int64_t i = 0; i < frames * joints; ++i) {
        double s = 0;
        for (int64_t d = 0; d < 3; ++d) {
            double diff = static_cast<double>(pred[i * 3 + d]) - target[i * 3 + d];
            s += diff * diff;
        }
        acc += std::sqrt(s);
    }
    return acc / static_cast<double>(frames * joints);
}

void AdamState::init_like(const std::vector<std::pair<std::string, Tensor<float>>>& params) {
    m.clear();
    v.clear();
    step = 0;
    for (const auto& [name, p] : params) {
        (void)name;
        m.push_back(Tensor<float>::zeros(p.shape()));
        v.push_back(Tensor<float>::zeros(p.shape()));
    }
}

void adam_step(std::vector<std::pair<std::string, Tensor<float>>>& params, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (state.m.size() != params.size())
        throw ConfigError("adam: state not initialized for this parameter set");
    state.step += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second;
        if (!p.has_grad()) continue;
        auto g = p.grad();
        auto mv = state.m[i].raw_values();
        auto vv = state.v[i].raw_values();
        auto pv = p.raw_values();
        for (int64_t k = 0; k < p.numel(); ++k) {
            double gk = g[k];
            double mk = beta1 * mv[k] + (1.0 - beta1) * gk;
            double vk = beta2 * vv[k] + (1.0 - beta2) * gk * gk;
            mv[k] = static_cast<float>(mk);
            vv[k] = static_cast<float>(vk);
            double mhat = mk / bc1;
            double vhat = vk / bc2;
            pv[k] = static_cast<float>(pv[k] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

double clip_grad_norm(std::vector<std::pair<std::string, Tensor<float>>>& params, double clip) {
    double sq = 0;
    for (auto& [name, p] : params) {
        (void)name;
        if (!p.has_grad()) continue;
        for (float g : p.grad()) sq += static_cast<double>(g) * g;
    }
    double norm = std::sqrt(sq);
    if (clip > 0 && norm > clip) {
        float s = static_cast<float>(clip / norm);
        for (auto& [name, p] : params) {
            (void)name;
            if (!p.has_grad()) continue;
            for (auto& g : p.grad_buffer()) g *= s;
        }
    }
    return norm;
}

namespace {

Tensor<float> sample_target_tensor(const data::Sample& s) {
    return Tensor<float>::from_vector({s.t2, s.joints, 3}, s.target);
}

Tensor<float> sample_last_pose(const data::Sample& s) {
    auto base = s.input.begin() + (s.t1 - 1) * s.joints * 3;
    return Tensor<float>::from_vector({s.joints, 3}, std::vector<float>(base, base + s.joints * 3));
}

}  // namespace

std::vector<float> predict_sample(model::CistGcn<float>& m, const data::Sample& sample) {
    Tensor<float> feat = model::build_input_features<float>(sample.input, sample.t1, sample.joints);
    auto res = m.forward(feat, sample_last_pose(sample), /*training=*/false);
    return std::vector<float>(res.prediction.values().begin(), res.prediction.values().end());
}

Trainer::Trainer(model::CistGcn<float>& m, const TrainConfig& cfg) : model_(m), cfg_(cfg) {
    cfg_.validate();
    params_ = model_.named_parameters();
    adam_.init_like(params_);
}

EpochReport Trainer::train_epoch(const std::vector<data::Sample>& train_samples,
                                 const std::vector<data::Sample>& val_samples, int64_t epoch) {
    if (train_samples.empty()) throw FormatError("train: empty dataset");
    auto t0 = std::chrono::steady_clock::now();
    EpochReport rep;
    rep.epoch = epoch;
    rep.lr = cfg_.lr_at_epoch(epoch);

    std::vector<size_t> order(train_samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::derive(cfg_.seed, 0x7368756646ULL, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_acc = 0;
    double gn_acc = 0, gn_max = 0;
    int64_t batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
        size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
        int64_t n = static_cast<int64_t>(end - start);
        for (auto& [name, p] : params_) {
            (void)name;
            p.zero_grad();
        }
        for (size_t k = start; k < end; ++k) {
            size_t idx = order[k];
            data::Sample sample = train_samples[idx];
            try {
                if (!cfg_.augmentation.is_identity()) {
                    Rng aug_rng(Rng::derive(cfg_.seed, 0x617567ULL, static_cast<uint64_t>(epoch),
                                            static_cast<uint64_t>(idx)));
                    data::augment(sample, cfg_.augmentation, aug_rng);
                }
                Tensor<float> feat =
                    model::build_input_features<float>(sample.input, sample.t1, sample.joints);
                Tape<float> tape;
                Tape<float>::Scope scope(tape);
                auto res = model_.forward(feat, sample_last_pose(sample), /*training=*/true);
                Tensor<float> loss = mpjpe_loss(res.prediction, sample_target_tensor(sample));
                loss_acc += loss.item();
                tape.backward(loss);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches) + ", sample " +
                                   sample.id() + ")");
            }
        }
        // batch mean: grads were accumulated as a sum over samples
        float inv = 1.0f / static_cast<float>(n);
        for (auto& [name, p] : params_) {
            (void)name;
            if (!p.has_grad()) continue;
            for (auto& g : p.grad_buffer()) g *= inv;
        }
        double gn = clip_grad_norm(params_, cfg_.grad_clip);
        gn_acc += gn;
        gn_max = std::max(gn_max, gn);
        adam_step(params_, adam_, rep.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps);
        ++batches;
    }
    rep.train_mpjpe = loss_acc / static_cast<double>(train_samples.size());
    rep.grad_norm_mean = batches ? gn_acc / static_cast<double>(batches) : 0;
    rep.grad_norm_max = gn_max;
    if (!val_samples.empty()) rep.val_mpjpe = validate(val_samples);
    rep.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<float> Trainer::predict(const data::Sample& sample) {
    return predict_sample(model_, sample);
}

double Trainer::validate(const std::vector<data::Sample>& samples) {
    double acc = 0;
    for (const auto& s : samples) {
        auto pred = predict_sample(model_, s);
        acc += mpjpe_value(pred, s.target, s.t2, s.joints);
    }
    return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

namespace {

constexpr uint32_t kCheckpointVersion = 1;

std::string config_blob(const CheckpointMeta& meta) {
    const auto& c = meta.model_cfg;
    std::ostringstream os;
    os << "model.t1=" << c.t1 << "\n";
    os << "model.t2=" << c.t2 << "\n";
    os << "model.joints=" << c.joints << "\n";
    os << "model.input_dims=" << c.input_dims << "\n";
    os << "model.channels=" << c.channels << "\n";
    os << "model.encoder_depth=" << c.encoder_depth << "\n";
    os << "model.dilations=";
    for (size_t i = 0; i < c.dilations.size(); ++i)
        os << (i ? "," : "") << c.dilations[i];
    os << "\n";
    os << "model.seed=" << c.seed << "\n";
    os << "epoch=" << meta.epoch << "\n";
    return os.str();
}

CheckpointMeta parse_config_blob(const std::string& blob) {
    CheckpointMeta meta;
    std::stringstream ss(blob);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("checkpoint config: bad line '" + line + "'");
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        auto& c = meta.model_cfg;
        if (key == "model.t1") c.t1 = std::stoll(val);
        else if (key == "model.t2") c.t2 = std::stoll(val);
        else if (key == "model.joints") c.joints = std::stoll(val);
        else if (key == "model.input_dims") c.input_dims = std::stoll(val);
        else if (key == "model.channels") c.channels = std::stoll(val);
        else if (key == "model.encoder_depth") c.encoder_depth = std::stoll(val);
        else if (key == "model.seed") c.seed = std::stoull(val);
        else if (key == "epoch") meta.epoch = std::stoll(val);
        else if (key == "model.dilations") {
            c.dilations.clear();
            std::stringstream ds(val);
            std::string tok;
            while (std::getline(ds, tok, ',')) c.dilations.push_back(std::stoi(tok));
        } else {
            throw FormatError("checkpoint config: unknown key '" + key + "'");
        }
    }
    return meta;
}

void write_named_tensor(io::BinaryWriter& w, const std::string& name, const Tensor<float>& t) {
    w.str_u32(name);
    w.u32(static_cast<uint32_t>(t.ndim()));
    for (int64_t d : t.shape()) w.u32(static_cast<uint32_t>(d));
    w.bytes(t.values().data(), static_cast<size_t>(t.numel()) * sizeof(float));
}

std::pair<std::string, Tensor<float>> read_named_tensor(io::BinaryReader& r) {
    std::string name = r.str_u32();
    uint32_t ndim = r.u32();
    if (ndim > 8) throw FormatError("checkpoint: implausible tensor rank");
    Shape shape(ndim);
    for (auto& d : shape) d = r.u32();
    std::vector<float> vals(static_cast<size_t>(numel_of(shape)));
    r.bytes(vals.data(), vals.size() * sizeof(float));
    return {name, Tensor<float>::from_vector(shape, std::move(vals))};
}

}  // namespace

void save_checkpoint(const std::string& path, model::CistGcn<float>& m, const AdamState* opt,
                     const CheckpointMeta& meta) {
    io::BinaryWriter w(path);
    w.bytes("CIST", 4);
    w.u32(kCheckpointVersion);
    w.str_u32(config_blob(meta));

    uint32_t count = 0;
    m.visit_state([&](const std::string&, Tensor<float>&, bool) { ++count; });
    w.u32(count);
    m.visit_state(
        [&](const std::string& name, Tensor<float>& t, bool) { write_named_tensor(w, name, t); });

    if (opt) {
        auto params = m.named_parameters();
        if (opt->m.size() != params.size())
            throw FormatError("checkpoint: optimizer state does not match parameters");
        w.u32(static_cast<uint32_t>(1 + 2 * params.size()));
        Tensor<float> step = Tensor<float>::from_vector({1}, {static_cast<float>(opt->step)});
        write_named_tensor(w, "adam.step", step);
        for (size_t i = 0; i < params.size(); ++i) {
            write_named_tensor(w, "adam.m." + params[i].first, opt->m[i]);
            write_named_tensor(w, "adam.v." + params[i].first, opt->v[i]);
        }
    } else {
        w.u32(0);
    }
    w.u64(meta.rng0);
    w.u64(meta.rng1);
    w.close();
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    io::BinaryReader r(path);
    r.expect_magic("CIST", "checkpoint");
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    CheckpointMeta meta = parse_config_blob(r.str_u32());

    LoadedCheckpoint out{model::CistGcn<float>::create(meta.model_cfg), {}, false, meta};

    uint32_t count = r.u32();
    std::map<std::string, Tensor<float>> loaded;
    for (uint32_t i = 0; i < count; ++i) {
        auto [name, t] = read_named_tensor(r);
        if (!loaded.emplace(name, t).second)
            throw FormatError("checkpoint: duplicate tensor '" + name + "'");
    }
    size_t used = 0;
    out.model.visit_state([&](const std::string& name, Tensor<float>& t, bool) {
        auto it = loaded.find(name);
        if (it == loaded.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
        if (it->second.shape() != t.shape())
            throw FormatError("checkpoint: shape mismatch for '" + name + "': file " +
                              shape_str(it->second.shape()) + " vs model " + shape_str(t.shape()));
        std::copy(it->second.values().begin(), it->second.values().end(),
                  t.raw_values().begin());
        ++used;
    });
    if (used != loaded.size())
        throw FormatError("checkpoint: file contains " + std::to_string(loaded.size() - used) +
                          " extra tensor(s)");

    uint32_t opt_count = r.u32();
    if (opt_count > 0) {
        std::map<std::string, Tensor<float>> ot;
        for (uint32_t i = 0; i < opt_count; ++i) {
            auto [name, t] = read_named_tensor(r);
            ot.emplace(name, t);
        }
        auto it = ot.find("adam.step");
        if (it == ot.end()) throw FormatError("checkpoint: optimizer state missing adam.step");
        out.opt.step = static_cast<int64_t>(it->second.values()[0]);
        auto params = out.model.named_parameters();
        for (const auto& [name, p] : params) {
            auto mi = ot.find("adam.m." + name);
            auto vi = ot.find("adam.v." + name);
            if (mi == ot.end() || vi == ot.end())
                throw FormatError("checkpoint: optimizer state missing for '" + name + "'");
            if (mi->second.shape() != p.shape() || vi->second.shape() != p.shape())
                throw FormatError("checkpoint: optimizer shape mismatch for '" + name + "'");
            out.opt.m.push_back(mi->second);
            out.opt.v.push_back(vi->second);
        }
        if (ot.size() != 1 + 2 * params.size())
            throw FormatError("checkpoint: unexpected optimizer tensor count");
        out.has_opt = true;
    }
    out.meta.rng0 = r.u64();
    out.meta.rng1 = r.u64();
    return out;
}

template Tensor<float> mpjpe_loss<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mpjpe_loss<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace cistgcn::training

#include "cistgcn/model.hpp"

#include <cmath>
#include <iostream>

namespace cistgcn::model {

namespace {

template <typename T>
std::vector<double> to_doubles(const Tensor<T>& t) {
    std::vector<double> out(t.values().begin(), t.values().end());
    return out;
}

// 1x1 channel mix: h [F_in,T,J] -> [F_out,T,J]
template <typename T>
Tensor<T> channel_mix(const Tensor<T>& w, const Tensor<T>& b, const Tensor<T>& h) {
    int64_t f_in = h.dim(0), t = h.dim(1), j = h.dim(2);
    Tensor<T> h2 = ops::reshape(h, {f_in, t * j});
    Tensor<T> z = ops::matmul(w, h2);
    z = ops::add(z, ops::reshape(b, {w.dim(0), 1}));
    return ops::reshape(z, {w.dim(0), t, j});
}

}  // namespace

ModelConfig ModelConfig::preset(const std::string& name) {
    ModelConfig cfg;
    if (name == "M8")
        cfg.channels = 8;
    else if (name == "M16")
        cfg.channels = 16;
    else if (name == "M32")
        cfg.channels = 32;
    else if (name == "M64")
        cfg.channels = 64;
    else
        throw ConfigError("unknown model preset '" + name + "' (expected M8/M16/M32/M64)");
    return cfg;
}

void ModelConfig::validate() const {
    if (t1 < 3) throw ConfigError("model.t1 must be >= 3 (accelerations need 3 frames)");
    if (t2 < 1) throw ConfigError("model.t2 must be >= 1");
    if (joints < 2) throw ConfigError("model.joints must be >= 2");
    if (input_dims != 10) throw ConfigError("model.input_dims must be 10");
    if (channels < 1) throw ConfigError("model.channels must be positive");
    if (encoder_depth < 1) throw ConfigError("model.encoder_depth must be >= 1");
    if (dilations.empty()) throw ConfigError("model.dilations must be non-empty");
    for (int d : dilations)
        if (d < 1) throw ConfigError("model.dilations entries must be >= 1");
}

std::string ModelConfig::summary() const {
    std::string s = "t1=" + std::to_string(t1) + " t2=" + std::to_string(t2) +
                    " J=" + std::to_string(joints) + " F=" + std::to_string(channels) +
                    " depth=" + std::to_string(encoder_depth);
    return s;
}

const Interpretation::Map* Interpretation::find_map(const std::string& name) const {
    for (const auto& m : maps)
        if (m.name == name) return &m;
    return nullptr;
}

std::vector<double> Interpretation::importance_concat() const {
    std::vector<double> out;
    for (const auto& g : gates) {
        out.insert(out.end(), g.w1.begin(), g.w1.end());
        out.insert(out.end(), g.w2.begin(), g.w2.end());
    }
    out.insert(out.end(), importance_temporal.begin(), importance_temporal.end());
    out.insert(out.end(), importance_spatial.begin(), importance_spatial.end());
    return out;
}

// ---------------------------------------------------------------- DAE

template <typename T>
void DynamicAdjacencyEncoder<T>::init(Rng& rng, int64_t f_in, int64_t nodes, bool spatial_) {
    spatial = spatial_;
    stage1.init(rng, f_in, f_in, 3);
    stage2.init(rng, f_in, f_in, 1);
    // the bilinear form contracts two F-vectors, so its fan-in is F*F; this
    // keeps the dynamic part of A at O(1) for every model width
    bilinear = nn::kaiming_uniform<T>(rng, {f_in, f_in}, f_in * f_in);
    static_adj = nn::identity_matrix<T>(nodes);
    static_adj.set_requires_grad(true);
}

template <typename T>
Tensor<T> DynamicAdjacencyEncoder<T>::forward(const Tensor<T>& h, bool training) {
    int64_t nodes = spatial ? h.dim(2) : h.dim(1);
    if (nodes != static_adj.dim(0))
        throw ShapeError("dae: input " + shape_str(h.shape()) + " inconsistent with node count " +
                         std::to_string(static_adj.dim(0)));
    // mean over the non-node axis -> [F, P]
    Tensor<T> g = spatial ? ops::mean(h, 1, false) : ops::mean(h, 2, false);
    g = stage1.forward(g, training);
    g = stage2.forward(g, training);
    // bounded bilinear operands: the quadratic G^T M G term would otherwise
    // compound across stacked blocks and overflow f32 at large activations
    g = ops::tanh(g);
    Tensor<T> mg = ops::matmul(bilinear, g);                       // [F,P]
    Tensor<T> a = ops::matmul(ops::transpose(g, {1, 0}), mg);      // [P,P]
    return ops::add(a, static_adj);
}

template <typename T>
void DynamicAdjacencyEncoder<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    stage1.visit(prefix + ".stage1", v);
    stage2.visit(prefix + ".stage2", v);
    v(prefix + ".bilinear", bilinear, true);
    v(prefix + ".static", static_adj, true);
}

// ---------------------------------------------------------------- GraphConv

template <typename T>
void GraphConv<T>::init(Rng& rng, int64_t f_in, int64_t f_out, int64_t nodes, bool spatial_) {
    spatial = spatial_;
    dae.init(rng, f_in, nodes, spatial_);
    weight = nn::kaiming_uniform<T>(rng, {f_out, f_in}, f_in);
    bias = Tensor<T>::zeros({f_out});
    bias.set_requires_grad(true);
    act.init(f_out);
}

template <typename T>
Tensor<T> GraphConv<T>::forward(const Tensor<T>& h, bool training, Tensor<T>* adjacency_out) {
    int64_t f = h.dim(0), t = h.dim(1), j = h.dim(2);
    Tensor<T> a = dae.forward(h, training);
    if (adjacency_out) *adjacency_out = a;
    Tensor<T> at = ops::transpose(a, {1, 0});
    Tensor<T> mixed;
    if (spatial) {
        // out[f,t,i] = sum_j A[i,j] h[f,t,j]
        Tensor<T> x2 = ops::reshape(h, {f * t, j});
        mixed = ops::reshape(ops::matmul(x2, at), {f, t, j});
    } else {
        // out[f,t,i... contract over frames
        Tensor<T> ht = ops::transpose(h, {0, 2, 1});  // [F,J,T]
        Tensor<T> x2 = ops::reshape(ht, {f * j, t});
        mixed = ops::transpose(ops::reshape(ops::matmul(x2, at), {f, j, t}), {0, 2, 1});
    }
    return act.forward(channel_mix(weight, bias, mixed), /*axis=*/0);
}

template <typename T>
void GraphConv<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    dae.visit(prefix + ".dae", v);
    v(prefix + ".weight", weight, true);
    v(prefix + ".bias", bias, true);
    act.visit(prefix + ".prelu", v);
}

// ---------------------------------------------------------------- GaNet

template <typename T>
void GatingNetwork<T>::init(Rng& rng, int64_t f_in, int64_t f_out) {
    dw = nn::kaiming_uniform<T>(rng, {f_in, 1, 3}, 3);
    pw = nn::kaiming_uniform<T>(rng, {f_in, f_in, 1}, f_in);
    pw_bias = Tensor<T>::zeros({f_in});
    pw_bias.set_requires_grad(true);
    act.init(f_in);
    head_w1.init(rng, f_in, f_out);
    head_w2.init(rng, f_in, f_out);
}

template <typename T>
void GatingNetwork<T>::forward(const Tensor<T>& h, bool training, Tensor<T>& w1, Tensor<T>& w2) {
    (void)training;
    int64_t f = h.dim(0);
    // per-channel statistics over T x J: mean, std, max -> [F,3]
    Tensor<T> m = ops::mean(ops::mean(h, 2, false), 1, false);  // [F]
    Tensor<T> mr = ops::reshape(m, {f, 1, 1});
    Tensor<T> d = ops::sub(h, mr);
    Tensor<T> var = ops::mean(ops::mean(ops::square(d), 2, false), 1, false);
    Tensor<T> sd = ops::sqrt(ops::add_scalar(var, T(1e-8)));
    Tensor<T> mx = ops::max(ops::max(h, 2, false), 1, false);
    std::vector<Tensor<T>> parts = {ops::reshape(m, {f, 1}), ops::reshape(sd, {f, 1}),
                                    ops::reshape(mx, {f, 1})};
    Tensor<T> stats = ops::concat(parts, 1);  // [F,3]
    // scale-invariant gates: normalize the statistics block by its RMS so the
    // heads see relative channel statistics and the softmax gate cannot
    // saturate on raw activation magnitude
    Tensor<T> rms = ops::sqrt(ops::add_scalar(ops::mean_all(ops::square(stats)), T(1e-8)));
    stats = ops::div(stats, rms);
    Tensor<T> y = ops::separable_conv(stats, dw, pw, 1, Padding::kSame);
    y = ops::add(y, ops::reshape(pw_bias, {f, 1}));
    y = act.forward(y);
    Tensor<T> s = ops::mean(y, 1, false);  // [F]
    w1 = ops::sigmoid(head_w1.forward(s));
    Tensor<T> z = head_w2.forward(s);
    // temperature sqrt(F) keeps the competitive gate from saturating
    // winner-take-all at init, which would collapse channel diversity
    T temp = std::sqrt(static_cast<T>(z.numel()));
    w2 = ops::scale(ops::softmax(ops::scale(z, T(1) / temp), 0), static_cast<T>(z.numel()));
}

template <typename T>
void GatingNetwork<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    v(prefix + ".dw", dw, true);
    v(prefix + ".pw", pw, true);
    v(prefix + ".pw_bias", pw_bias, true);
    act.visit(prefix + ".prelu", v);
    head_w1.visit(prefix + ".w1", v);
    head_w2.visit(prefix + ".w2", v);
}

// ---------------------------------------------------------------- DST-GCN block

template <typename T>
void DstGcnBlock<T>::init(Rng& rng, int64_t f_in, int64_t f_out, int64_t frames, int64_t joints) {
    dsgn.init(rng, f_in, f_out, joints, true);
    dtgn.init(rng, f_in, f_out, frames, false);
    ganet.init(rng, f_in, f_out);
    if (f_in != f_out) {
        proj.emplace();
        proj->init(rng, f_in, f_out);
    }
}

template <typename T>
Tensor<T> DstGcnBlock<T>::forward(const Tensor<T>& h, bool training, Interp* interp) {
    Tensor<T> w1, w2;
    ganet.forward(h, training, w1, w2);
    Tensor<T> a_s, a_t;
    Tensor<T> s = dsgn.forward(h, training, &a_s);
    Tensor<T> t = dtgn.forward(h, training, &a_t);
    int64_t f_out = s.dim(0);
    Tensor<T> gated = ops::add(ops::mul(s, ops::reshape(w1, {f_out, 1, 1})),
                               ops::mul(t, ops::reshape(w2, {f_out, 1, 1})));
    Tensor<T> skip = proj ? channel_mix(proj->weight, proj->bias, h) : h;
    if (interp) {
        interp->a_s = a_s;
        interp->a_t = a_t;
        interp->w1 = w1;
        interp->w2 = w2;
    }
    return ops::add(gated, skip);
}

template <typename T>
void DstGcnBlock<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    dsgn.visit(prefix + ".dsgn", v);
    dtgn.visit(prefix + ".dtgn", v);
    ganet.visit(prefix + ".ganet", v);
    if (proj) proj->visit(prefix + ".proj", v);
}

// ---------------------------------------------------------------- APTCN

template <typename T>
void Aptcn<T>::init(Rng& rng, int64_t f, int64_t t1, int64_t t2, int64_t joints,
                    const std::vector<int>& dilations) {
    branches.resize(dilations.size());
    for (size_t i = 0; i < dilations.size(); ++i)
        branches[i].init(rng, f, f, 3, dilations[i], Padding::kSame);
    compress.init(rng, static_cast<int64_t>(dilations.size()) * f, f, 1);
    time_weight = nn::kaiming_uniform<T>(rng, {joints, t1, t2}, t1);
    time_bias = Tensor<T>::zeros({joints, t2});
    time_bias.set_requires_grad(true);
}

template <typename T>
Tensor<T> Aptcn<T>::forward(const Tensor<T>& h, bool training) {
    Tensor<T> ht = ops::transpose(h, {2, 0, 1});  // [J,F,t1], joints as batch
    std::vector<Tensor<T>> outs;
    outs.reserve(branches.size());
    for (auto& b : branches) outs.push_back(b.forward(ht, training));
    Tensor<T> cat = ops::concat(outs, 1);          // [J, nB*F, t1]
    Tensor<T> z = compress.forward(cat);           // [J,F,t1]
    Tensor<T> proj = ops::bmm(z, time_weight);     // [J,F,t2]
    int64_t j = proj.dim(0), t2 = proj.dim(2);
    proj = ops::add(proj, ops::reshape(time_bias, {j, 1, t2}));
    return ops::transpose(proj, {1, 2, 0});  // [F,t2,J]
}

template <typename T>
void Aptcn<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    for (size_t i = 0; i < branches.size(); ++i)
        branches[i].visit(prefix + ".branch" + std::to_string(i + 1), v);
    compress.visit(prefix + ".compress", v);
    v(prefix + ".time.weight", time_weight, true);
    v(prefix + ".time.bias", time_bias, true);
}

// ---------------------------------------------------------------- ConNet

template <typename T>
void ContextNetwork<T>::init(Rng& rng, int64_t f, int64_t t2, int64_t joints) {
    for (Branch* b : {&b_max, &b_avg, &b_attn}) {
        b->pre.init(rng, f, f, 3);
        b->post.init(rng, f * t2, t2);
    }
    attn_score = nn::kaiming_uniform<T>(rng, {f}, f);
    head_temporal.init(rng, 3 * t2, t2);
    head_spatial.init(rng, 3 * t2, joints);
    head_context.init(rng, 3 * t2, t2 * 3, /*zero_init=*/true);
}

template <typename T>
typename ContextNetwork<T>::Output ContextNetwork<T>::forward(const Tensor<T>& h, bool training) {
    int64_t f = h.dim(0), t2 = h.dim(1);
    auto wrap = [&](Branch& b) {
        Tensor<T> x = ops::transpose(h, {2, 0, 1});       // [J,F,t2]
        x = b.pre.forward(x, training);
        return ops::transpose(x, {1, 2, 0});              // [F,t2,J]
    };
    Tensor<T> hm = wrap(b_max);
    Tensor<T> ha = wrap(b_avg);
    Tensor<T> hx = wrap(b_attn);
    Tensor<T> pm = ops::pool(hm, 2, PoolKind::kMax);  // [F,t2]
    Tensor<T> pa = ops::pool(ha, 2, PoolKind::kAvg);
    Tensor<T> scores = ops::sum(ops::mul(hx, ops::reshape(attn_score, {f, 1, 1})), 0, true);
    Tensor<T> px = ops::attention_pool(hx, scores, 2);  // [F,t2]
    Tensor<T> om = b_max.post.forward(ops::reshape(pm, {f * t2}));
    Tensor<T> oa = b_avg.post.forward(ops::reshape(pa, {f * t2}));
    Tensor<T> ox = b_attn.post.forward(ops::reshape(px, {f * t2}));
    Output out;
    std::vector<Tensor<T>> pooled = {om, oa, ox};
    out.merged = ops::concat(pooled, 0);  // O, [3*t2]
    out.importance_temporal = ops::sigmoid(head_temporal.forward(out.merged));
    out.importance_spatial = ops::sigmoid(head_spatial.forward(out.merged));
    out.context = ops::reshape(head_context.forward(out.merged), {t2, 1, 3});
    return out;
}

template <typename T>
void ContextNetwork<T>::visit(const std::string& prefix, const nn::StateVisitor<T>& v) {
    const char* names[3] = {"max", "avg", "attn"};
    Branch* bs[3] = {&b_max, &b_avg, &b_attn};
    for (int i = 0; i < 3; ++i) {
        bs[i]->pre.visit(prefix + "." + names[i] + ".pre", v);
        bs[i]->post.visit(prefix + "." + names[i] + ".post", v);
    }
    v(prefix + ".attn_score", attn_score, true);
    head_temporal.visit(prefix + ".head_t", v);
    head_spatial.visit(prefix + ".head_s", v);
    head_context.visit(prefix + ".head_ctx", v);
}

// ---------------------------------------------------------------- CistGcn

template <typename T>
CistGcn<T> CistGcn<T>::create(const ModelConfig& cfg) {
    cfg.validate();
    if (!cfg.is_named_preset())
        std::cerr << "warning: channels=" << cfg.channels
                  << " is not a named preset (M8/M16/M32/M64)\n";
    CistGcn m;
    m.cfg = cfg;
    Rng rng(Rng::derive(cfg.seed, 0x6d6f64656cULL));  // model init stream
    m.embed.init(rng, cfg.input_dims, cfg.channels);
    m.encoder.resize(static_cast<size_t>(cfg.encoder_depth));
    for (auto& b : m.encoder) b.init(rng, cfg.channels, cfg.channels, cfg.t1, cfg.joints);
    m.aptcn.init(rng, cfg.channels, cfg.t1, cfg.t2, cfg.joints, cfg.dilations);
    m.out_block.init(rng, cfg.channels, cfg.channels, cfg.t2, cfg.joints);
    m.connet.init(rng, cfg.channels, cfg.t2, cfg.joints);
    m.head.init(rng, cfg.channels, 3, /*zero_init=*/true);
    return m;
}

template <typename T>
CistGcn<T> CistGcn<T>::create_with_random_heads(const ModelConfig& cfg) {
    CistGcn m = create(cfg);
    Rng rng(Rng::derive(cfg.seed, 0x68656164ULL));
    m.head.weight = nn::kaiming_uniform<T>(rng, {3, cfg.channels}, cfg.channels);
    m.connet.head_context.weight =
        nn::kaiming_uniform<T>(rng, {cfg.t2 * 3, 3 * cfg.t2}, 3 * cfg.t2);
    return m;
}

template <typename T>
ForwardResult<T> CistGcn<T>::forward(const Tensor<T>& features, const Tensor<T>& last_pose,
                                     bool training) {
    if (features.ndim() != 3 || features.dim(0) != cfg.t1 || features.dim(1) != cfg.joints ||
        features.dim(2) != cfg.input_dims)
        throw ShapeError("model: features must be [t1,J," + std::to_string(cfg.input_dims) +
                         "], got " + shape_str(features.shape()));
    if (last_pose.ndim() != 2 || last_pose.dim(0) != cfg.joints || last_pose.dim(1) != 3)
        throw ShapeError("model: last_pose must be [J,3], got " + shape_str(last_pose.shape()));

    // Internal activations run at unit scale; the data contract stays in mm.
    // Raw mm-scale activations overflow f32 through the stacked blocks, and
    // velocity/acceleration channels carry the predictive signal at a much
    // smaller physical scale than positions, so each channel group gets its
    // own divisor: positions /1000, velocities /100, accelerations /50. The
    // displacement head emits millimeters directly: an output amplifier would
    // push optimal head weights below the optimizer step size.

    ForwardResult<T> res;
    Tensor<T> h;
    {
        StageGuard stage("embed");
        std::vector<T> div = {1000, 1000, 1000, 100, 100, 100, 50, 50, 50, 100};
        Tensor<T> channel_scale = Tensor<T>::zeros({1, 1, cfg.input_dims});
        for (int64_t c = 0; c < cfg.input_dims; ++c)
            channel_scale.raw_values()[c] = T(1) / div[static_cast<size_t>(c)];
        Tensor<T> scaled = ops::mul(features, channel_scale);
        h = ops::transpose(embed.forward(scaled), {2, 0, 1});  // [F,t1,J]
    }
    std::vector<typename DstGcnBlock<T>::Interp> enc_interp(encoder.size());
    for (size_t i = 0; i < encoder.size(); ++i) {
        StageGuard stage("encoder-block-" + std::to_string(i + 1));
        h = encoder[i].forward(h, training, &enc_interp[i]);
    }
    {
        StageGuard stage("aptcn");
        h = aptcn.forward(h, training);  // [F,t2,J]
    }
    typename DstGcnBlock<T>::Interp out_interp;
    Tensor<T> g;
    {
        StageGuard stage("out-block");
        g = out_block.forward(h, training, &out_interp);
    }
    typename ContextNetwork<T>::Output ctx;
    {
        StageGuard stage("connet");
        ctx = connet.forward(h, training);
    }
    Tensor<T> delta;
    {
        StageGuard stage("head");
        Tensor<T> d = head.forward(ops::transpose(g, {1, 2, 0}));  // [t2,J,3]
        delta = ops::add(d, ctx.context);  // millimeters
    }
    res.prediction = ops::add(delta, ops::reshape(last_pose, {1, cfg.joints, 3}));

    auto& interp = res.interp;
    for (size_t i = 0; i < encoder.size(); ++i) {
        const auto& e = enc_interp[i];
        std::string n = std::to_string(i + 1);
        interp.maps.push_back({"dsgn-in-" + n, e.a_s.dim(0), e.a_s.dim(1), to_doubles(e.a_s)});
        interp.maps.push_back({"tsgn-in-" + n, e.a_t.dim(0), e.a_t.dim(1), to_doubles(e.a_t)});
        interp.gates.push_back({"block-" + n, to_doubles(e.w1), to_doubles(e.w2)});
    }
    interp.maps.push_back(
        {"dsgn-out", out_interp.a_s.dim(0), out_interp.a_s.dim(1), to_doubles(out_interp.a_s)});
    interp.maps.push_back(
        {"tsgn-out", out_interp.a_t.dim(0), out_interp.a_t.dim(1), to_doubles(out_interp.a_t)});
    interp.gates.push_back({"out", to_doubles(out_interp.w1), to_doubles(out_interp.w2)});
    interp.importance_temporal = to_doubles(ctx.importance_temporal);
    interp.importance_spatial = to_doubles(ctx.importance_spatial);
    interp.context_vector = to_doubles(ctx.merged);
    return res;
}

template <typename T>
void CistGcn<T>::visit_state(const nn::StateVisitor<T>& v) {
    embed.visit("embed", v);
    for (size_t i = 0; i < encoder.size(); ++i)
        encoder[i].visit("enc." + std::to_string(i + 1), v);
    aptcn.visit("aptcn", v);
    out_block.visit("out", v);
    connet.visit("connet", v);
    head.visit("head", v);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> CistGcn<T>::named_parameters() {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    visit_state([&](const std::string& name, Tensor<T>& t, bool trainable) {
        if (trainable) out.emplace_back(name, t);
    });
    return out;
}

template <typename T>
int64_t CistGcn<T>::param_count() {
    int64_t n = 0;
    visit_state([&](const std::string&, Tensor<T>& t, bool trainable) {
        if (trainable) n += t.numel();
    });
    return n;
}

template <typename T>
std::map<std::string, int64_t> CistGcn<T>::param_breakdown() {
    std::map<std::string, int64_t> out;
    visit_state([&](const std::string& name, Tensor<T>& t, bool trainable) {
        if (!trainable) return;
        std::string top = name.substr(0, name.find('.'));
        out[top] += t.numel();
    });
    return out;
}

template <typename T>
Tensor<T> build_input_features(const std::vector<T>& frames, int64_t t1, int64_t joints) {
    if (t1 < 3) throw ShapeError("build_input_features: window must have at least 3 frames");
    if (static_cast<int64_t>(frames.size()) != t1 * joints * 3)
        throw ShapeError("build_input_features: frame buffer size mismatch");
    std::vector<T> out(static_cast<size_t>(t1 * joints * 10), T(0));
    auto pos = [&](int64_t t, int64_t j, int64_t d) { return frames[(t * joints + j) * 3 + d]; };
    auto cell = [&](int64_t t, int64_t j, int64_t c) -> T& {
        return out[(t * joints + j) * 10 + c];
    };
    for (int64_t t = 0; t < t1; ++t)
        for (int64_t j = 0; j < joints; ++j) {
            T v[3] = {0, 0, 0};
            for (int64_t d = 0; d < 3; ++d) {
                cell(t, j, d) = pos(t, j, d);
                if (t >= 1) v[d] = pos(t, j, d) - pos(t - 1, j, d);
                cell(t, j, 3 + d) = v[d];
                if (t >= 2) {
                    T vp = pos(t - 1, j, d) - pos(t - 2, j, d);
                    cell(t, j, 6 + d) = v[d] - vp;
                }
            }
            cell(t, j, 9) = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
    return Tensor<T>::from_vector({t1, joints, 10}, std::move(out));
}

int64_t param_count(const ModelConfig& cfg) {
    auto m = CistGcn<float>::create(cfg);
    return m.param_count();
}

#define CISTGCN_MODEL_INSTANTIATE(T)                                            \
    template struct DynamicAdjacencyEncoder<T>;                                 \
    template struct GraphConv<T>;                                               \
    template struct GatingNetwork<T>;                                           \
    template struct DstGcnBlock<T>;                                             \
    template struct Aptcn<T>;                                                   \
    template struct ContextNetwork<T>;                                          \
    template struct CistGcn<T>;                                                 \
    template Tensor<T> build_input_features<T>(const std::vector<T>&, int64_t, int64_t);

CISTGCN_MODEL_INSTANTIATE(float)
CISTGCN_MODEL_INSTANTIATE(double)

#undef CISTGCN_MODEL_INSTANTIATE

}  // namespace cistgcn::model

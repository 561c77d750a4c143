#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cistgcn/nn.hpp"

namespace cistgcn::model {

struct ModelConfig {
    int64_t t1 = 10;            // input frames
    int64_t t2 = 25;            // output frames
    int64_t joints = 22;        // J
    int64_t input_dims = 10;    // positions + velocities + accelerations + speed norm
    int64_t channels = 32;      // F, hidden width; presets M8/M16/M32/M64
    int64_t encoder_depth = 5;  // stacked DST-GCN blocks
    std::vector<int> dilations = {1, 2, 3};
    uint64_t seed = 42;

    static ModelConfig preset(const std::string& name);  // "M8".."M64"
    void validate() const;                               // throws ConfigError
    bool is_named_preset() const {
        return channels == 8 || channels == 16 || channels == 32 || channels == 64;
    }
    std::string summary() const;
};

// Per-sample interpretability artifacts, extracted on every forward pass.
struct Interpretation {
    struct Map {
        std::string name;  // dsgn-in-1..N, tsgn-in-1..N, dsgn-out, tsgn-out
        int64_t rows = 0, cols = 0;
        std::vector<double> values;
    };
    struct Gates {
        std::string block;  // block-1..N, out
        std::vector<double> w1, w2;
    };
    std::vector<Map> maps;
    std::vector<Gates> gates;
    std::vector<double> importance_temporal;  // length t2, in (0,1)
    std::vector<double> importance_spatial;   // length J, in (0,1)
    std::vector<double> context_vector;       // O, length 3*t2

    const Map* find_map(const std::string& name) const;
    // Canonical flat importance vector: encoder blocks 1..N (w1 then w2),
    // output block, ConNet temporal, ConNet spatial.
    std::vector<double> importance_concat() const;
};

// DAE: mean-reduce the non-node axis, two conv stages over the node axis,
// bilinear projection to PxP plus a learnable static bias initialized to I.
template <typename T>
struct DynamicAdjacencyEncoder {
    nn::ConvBlock<T> stage1;  // k=3
    nn::ConvBlock<T> stage2;  // k=1
    Tensor<T> bilinear;       // [F,F]
    Tensor<T> static_adj;     // [P,P]
    bool spatial = true;

    void init(Rng& rng, int64_t f_in, int64_t nodes, bool spatial_);
    Tensor<T> forward(const Tensor<T>& h, bool training);  // h [F,T,J] -> [P,P]
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

// One domain of Eq-3 graph convolution: contract the learned adjacency over
// the node axis, then the channel transform and activation.
template <typename T>
struct GraphConv {
    DynamicAdjacencyEncoder<T> dae;
    Tensor<T> weight;  // [F_out, F_in]
    Tensor<T> bias;    // [F_out]
    nn::PRelu<T> act;
    bool spatial = true;

    void init(Rng& rng, int64_t f_in, int64_t f_out, int64_t nodes, bool spatial_);
    Tensor<T> forward(const Tensor<T>& h, bool training, Tensor<T>* adjacency_out);
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

// GaNet: channel statistics -> separable conv -> two heads with different
// fusion modes (sigmoid gate W1, F-scaled softmax gate W2).
template <typename T>
struct GatingNetwork {
    Tensor<T> dw;  // depthwise [F_in,1,3]
    Tensor<T> pw;  // pointwise [F_in,F_in,1]
    Tensor<T> pw_bias;
    nn::PRelu<T> act;
    nn::Linear<T> head_w1, head_w2;  // F_in -> F_out

    void init(Rng& rng, int64_t f_in, int64_t f_out);
    void forward(const Tensor<T>& h, bool training, Tensor<T>& w1, Tensor<T>& w2);
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

template <typename T>
struct DstGcnBlock {
    GraphConv<T> dsgn;  // spatial
    GraphConv<T> dtgn;  // temporal
    GatingNetwork<T> ganet;
    std::optional<nn::Linear<T>> proj;  // skip projection when F_in != F_out

    struct Interp {
        Tensor<T> a_s, a_t, w1, w2;
    };

    void init(Rng& rng, int64_t f_in, int64_t f_out, int64_t frames, int64_t joints);
    Tensor<T> forward(const Tensor<T>& h, bool training, Interp* interp);
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

// Pyramid of dilated temporal convolutions, concatenated, compressed, then a
// per-joint linear map over the time axis projecting t1 -> t2 frames.
template <typename T>
struct Aptcn {
    std::vector<nn::ConvBlock<T>> branches;
    nn::Conv1d<T> compress;  // 1x1, n_branches*F -> F
    Tensor<T> time_weight;   // [J, t1, t2]
    Tensor<T> time_bias;     // [J, t2]

    void init(Rng& rng, int64_t f, int64_t t1, int64_t t2, int64_t joints,
              const std::vector<int>& dilations);
    Tensor<T> forward(const Tensor<T>& h, bool training);  // [F,t1,J] -> [F,t2,J]
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

// Triple-pooling context network with importance heads.
template <typename T>
struct ContextNetwork {
    struct Branch {
        nn::ConvBlock<T> pre;  // over time, per joint
        nn::Linear<T> post;    // F*t2 -> t2
    };
    Branch b_max, b_avg, b_attn;
    Tensor<T> attn_score;          // [F] score projection for attention pooling
    nn::Linear<T> head_temporal;   // 3*t2 -> t2
    nn::Linear<T> head_spatial;    // 3*t2 -> J
    nn::Linear<T> head_context;    // 3*t2 -> t2*3, zero-init

    struct Output {
        Tensor<T> context;  // [t2,1,3], broadcast over joints as the residual
        Tensor<T> importance_temporal;  // [t2]
        Tensor<T> importance_spatial;   // [J]
        Tensor<T> merged;               // O, [3*t2]
    };

    void init(Rng& rng, int64_t f, int64_t t2, int64_t joints);
    Output forward(const Tensor<T>& h, bool training);  // h [F,t2,J]
    void visit(const std::string& prefix, const nn::StateVisitor<T>& v);
};

template <typename T>
struct ForwardResult {
    Tensor<T> prediction;  // [t2,J,3]
    Interpretation interp;
};

template <typename T>
struct CistGcn {
    ModelConfig cfg;
    nn::Linear<T> embed;  // input_dims -> F, applied channel-last
    std::vector<DstGcnBlock<T>> encoder;
    Aptcn<T> aptcn;
    DstGcnBlock<T> out_block;
    ContextNetwork<T> connet;
    nn::Linear<T> head;  // F -> 3, zero-init so a fresh model predicts zero displacement

    static CistGcn create(const ModelConfig& cfg);
    // Verification variant: final heads randomized so gradients reach every layer.
    static CistGcn create_with_random_heads(const ModelConfig& cfg);

    // features [t1,J,input_dims], last_pose [J,3]
    ForwardResult<T> forward(const Tensor<T>& features, const Tensor<T>& last_pose,
                             bool training);

    void visit_state(const nn::StateVisitor<T>& v);
    std::vector<std::pair<std::string, Tensor<T>>> named_parameters();  // trainable only
    int64_t param_count();
    std::map<std::string, int64_t> param_breakdown();  // by top-level component
};

// Motion feature construction: channels [0,3)=position, [3,6)=velocity,
// [6,9)=acceleration, [9]=velocity L2 norm; v_0 = 0, a_0 = a_1 = 0.
template <typename T>
Tensor<T> build_input_features(const std::vector<T>& frames, int64_t t1, int64_t joints);

int64_t param_count(const ModelConfig& cfg);

}  // namespace cistgcn::model

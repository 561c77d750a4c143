#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cistgcn/data.hpp"
#include "cistgcn/model.hpp"

namespace cistgcn::training {

struct TrainConfig {
    int64_t epochs = 50;
    int64_t batch_size = 32;
    double learning_rate = 1e-3;
    double lr_decay_factor = 0.5;
    int64_t lr_decay_interval = 0;  // 0 -> epochs/3
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double grad_clip = 5.0;
    int64_t stride = 5;  // training window stride
    data::AugmentationSpec augmentation;
    uint64_t seed = 42;
    std::string checkpoint_dir;
    int64_t checkpoint_every = 1;

    void validate() const;
    double lr_at_epoch(int64_t epoch) const;  // step decay, epoch 0-based
};

// Eq-4 MPJPE as a differentiable graph op; pred/target [T,J,3].
template <typename T>
Tensor<T> mpjpe_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Plain f64-accumulated value for evaluation paths.
double mpjpe_value(std::span<const float> pred, std::span<const float> target, int64_t frames,
                   int64_t joints);

struct AdamState {
    std::vector<Tensor<float>> m, v;  // parallel to the parameter list
    int64_t step = 0;

    void init_like(const std::vector<std::pair<std::string, Tensor<float>>>& params);
};

// Standard adaptive-moment update with bias correction; params without an
// accumulated grad are left untouched.
void adam_step(std::vector<std::pair<std::string, Tensor<float>>>& params, AdamState& state,
               double lr, double beta1, double beta2, double eps);

// Scales all grads by clip/norm when the global L2 norm exceeds clip.
double clip_grad_norm(std::vector<std::pair<std::string, Tensor<float>>>& params, double clip);

struct EpochReport {
    int64_t epoch = 0;
    double train_mpjpe = 0;
    double val_mpjpe = 0;
    double grad_norm_mean = 0, grad_norm_max = 0;
    double lr = 0;
    double seconds = 0;
};

class Trainer {
public:
    Trainer(model::CistGcn<float>& m, const TrainConfig& cfg);

    EpochReport train_epoch(const std::vector<data::Sample>& train_samples,
                            const std::vector<data::Sample>& val_samples, int64_t epoch);

    // Forward in eval mode; returns [t2*J*3] prediction values.
    std::vector<float> predict(const data::Sample& sample);
    double validate(const std::vector<data::Sample>& samples);

    AdamState& optimizer() { return adam_; }
    const AdamState& optimizer() const { return adam_; }

private:
    model::CistGcn<float>& model_;
    TrainConfig cfg_;
    std::vector<std::pair<std::string, Tensor<float>>> params_;
    AdamState adam_;
};

// Checkpoint container: magic "CIST", versioned, key=value config blob, model
// state tensors, optimizer tensors, 16-byte rng state.
struct CheckpointMeta {
    model::ModelConfig model_cfg;
    int64_t epoch = 0;
    uint64_t rng0 = 0, rng1 = 0;
};

void save_checkpoint(const std::string& path, model::CistGcn<float>& m, const AdamState* opt,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    model::CistGcn<float> model;
    AdamState opt;
    bool has_opt = false;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Runs prediction for a sample with an existing model (eval mode, no tape).
std::vector<float> predict_sample(model::CistGcn<float>& m, const data::Sample& sample);

}  // namespace cistgcn::training

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cistgcn/data.hpp"
#include "cistgcn/model.hpp"

namespace cistgcn::evaluation {

// 1-based frame index for a horizon in ms; throws if it maps to 0.
int64_t horizon_frame_index(int horizon_ms, double fps);

inline std::vector<int> default_horizons() { return {80, 160, 320, 400, 560, 720, 880, 1000}; }

enum class Sampling { kAll, kPerActionFixed };

struct EvalOptions {
    Sampling sampling = Sampling::kAll;
    int64_t per_action_n = 256;
    uint64_t seed = 42;
    int workers = 1;
    // false: single-frame error at the horizon (default); true: average over
    // frames 1..horizon (the footnote variant some works report).
    bool average_up_to_horizon = false;
};

struct HorizonTable {
    std::vector<int> horizons_ms;
    std::vector<int64_t> horizon_frames;  // 1-based
    struct Row {
        std::string action;
        int64_t count = 0;
        std::vector<double> mpjpe;  // one per horizon
    };
    std::vector<Row> rows;            // per action, sorted; "average" row last
    double whole_window_mpjpe = 0;    // mean over all t2 frames and samples
    int64_t total_samples = 0;

    const Row* find(const std::string& action) const;
};

// Predictor fills pred (t2*J*3) for a sample.
using Predictor = std::function<void(const data::Sample&, std::vector<float>& pred)>;

HorizonTable evaluate_predictor(const std::vector<data::Sample>& samples, const Predictor& fn,
                                const std::vector<int>& horizons, double fps,
                                const EvalOptions& opt);

HorizonTable evaluate_model(model::CistGcn<float>& m, const std::vector<data::Sample>& samples,
                            const std::vector<int>& horizons, double fps, const EvalOptions& opt);

// Repeats the last input pose for every future frame.
HorizonTable zero_velocity_baseline(const std::vector<data::Sample>& samples,
                                    const std::vector<int>& horizons, double fps,
                                    const EvalOptions& opt);

enum class SweepKind { kRotationY, kNoise };

struct SweepReport {
    SweepKind kind;
    std::vector<double> grid;
    std::vector<double> mpjpe;  // mean over all t2 frames per grid point
    int64_t samples_per_point = 0;
    double noise_sigma_mm = 0;  // noise sweeps only
};

// Rotation perturbs inputs AND targets (rigid, label-consistent); noise
// corrupts inputs only so the metric measures prediction degradation.
SweepReport robustness_sweep(model::CistGcn<float>& m, const std::vector<data::Sample>& samples,
                             SweepKind kind, const std::vector<double>& grid,
                             double noise_sigma_mm, const EvalOptions& opt, double fps = 25.0);

enum class ReportFormat { kTsv, kJsonLines };

void write_table(const HorizonTable& table, const std::string& path, ReportFormat format);
void write_sweep(const SweepReport& sweep, const std::string& path, ReportFormat format);

}  // namespace cistgcn::evaluation

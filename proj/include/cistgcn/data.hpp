#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cistgcn/common.hpp"
#include "cistgcn/rng.hpp"

namespace cistgcn::data {

// T x J x 3 joint coordinates in millimeters, row-major (frame, joint, xyz).
struct PoseSequence {
    int64_t joints = 0;
    float fps = 25.0f;
    std::string action;
    std::string subject;
    std::vector<float> frames;

    int64_t frame_count() const {
        return joints > 0 ? static_cast<int64_t>(frames.size()) / (joints * 3) : 0;
    }
    float& at(int64_t t, int64_t j, int64_t d) { return frames[(t * joints + j) * 3 + d]; }
    float at(int64_t t, int64_t j, int64_t d) const { return frames[(t * joints + j) * 3 + d]; }
    void validate() const;  // T >= 1, J >= 2, fps > 0, finite coordinates
};

// PSEQ binary format, fixed little-endian layout; round-trips byte-exactly.
void save_pseq(const PoseSequence& seq, const std::string& path);
PoseSequence load_pseq(const std::string& path);

// CSV: rows = frames, columns = J*3 in x,y,z joint-major order.
PoseSequence import_csv(const std::string& path, float fps);

// Keeps every round(fps/target)-th frame. If the ratio is not close to an
// integer a warning is recorded (exact retiming is unsupported).
PoseSequence downsample(const PoseSequence& seq, float target_fps,
                        std::string* warning = nullptr);

// One training/eval sample: a t1-frame input window and t2-frame target.
struct Sample {
    int64_t joints = 0;
    int64_t t1 = 0, t2 = 0;
    std::vector<float> input;   // t1*J*3
    std::vector<float> target;  // t2*J*3
    std::string action;
    std::string subject;
    int64_t sequence_index = 0;
    int64_t window_start = 0;
    std::string id() const {
        return action + "/" + subject + "/" + std::to_string(sequence_index) + ":" +
               std::to_string(window_start);
    }
};

int64_t window_count(int64_t total_frames, int64_t t1, int64_t t2, int64_t stride);
std::vector<Sample> window_split(const PoseSequence& seq, int64_t t1, int64_t t2, int64_t stride,
                                 int64_t sequence_index = 0);

struct AugmentationSpec {
    double rotation_max_deg = 0.0;   // yaw range [0, 360]
    double noise_rate = 0.0;         // per joint-frame corruption probability
    double noise_sigma_mm = 25.0;
    double scale_lo = 1.0, scale_hi = 1.0;  // around 1
    double translation_max_mm = 0.0;
    void validate() const;
    bool is_identity() const {
        return rotation_max_deg == 0 && noise_rate == 0 && scale_lo == 1 && scale_hi == 1 &&
               translation_max_mm == 0;
    }
};

struct AppliedTransform {
    double yaw_deg = 0, scale = 1;
    std::array<double, 3> translation{0, 0, 0};
    std::array<double, 3> center{0, 0, 0};
};

// Rigid/scale transforms hit input AND target (labels stay consistent);
// noise corrupts the input window only.
AppliedTransform augment(Sample& sample, const AugmentationSpec& spec, Rng& rng);

std::array<double, 3> last_input_centroid(const Sample& sample);
void rotate_y_about(std::vector<float>& frames, int64_t joints, double degrees,
                    const std::array<double, 3>& center);
void add_noise(std::vector<float>& frames, double rate, double sigma_mm, Rng& rng);

enum class SynthClass { kCyclic, kStatic, kSpontaneous };
const char* synth_class_name(SynthClass c);
SynthClass synth_class_from_name(const std::string& name);

// Deterministic 22-joint stick-figure generator; cyclic is a gait-like loop
// with a frame-exact 32-frame period (~1.3 s at 25 Hz), static is a fixed
// pose with small jitter, spontaneous adds smoothed random-walk bursts on
// random limbs.
PoseSequence synth_generate(SynthClass cls, int64_t n_frames, int64_t joints, float fps,
                            uint64_t seed);

struct SequenceDataset {
    struct Item {
        PoseSequence seq;
        std::string split;  // train / val / test
        std::string path;
    };
    std::vector<Item> items;
    std::map<std::string, std::vector<size_t>> by_action;

    std::vector<size_t> ids_in_split(const std::string& split) const;
    void rebuild_index();

    struct IndexRecord {
        std::string path, action, subject, split;
    };

    // Index file: one record per line, `path<TAB>action<TAB>subject<TAB>split`.
    static SequenceDataset load(const std::string& index_path);
    static void write_index(const std::string& index_path, const std::vector<IndexRecord>& recs);
};

std::vector<Sample> make_samples(const SequenceDataset& ds, const std::string& split, int64_t t1,
                                 int64_t t2, int64_t stride);

}  // namespace cistgcn::data

#include "cistgcn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cistgcn/binio.hpp"

namespace cistgcn::data {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr uint32_t kPseqVersion = 1;
}  // namespace

void PoseSequence::validate() const {
    if (joints < 2) throw FormatError("pose sequence needs at least 2 joints");
    if (frame_count() < 1) throw FormatError("pose sequence needs at least 1 frame");
    if (static_cast<int64_t>(frames.size()) != frame_count() * joints * 3)
        throw FormatError("pose sequence buffer size inconsistent");
    if (!(fps > 0.0f)) throw FormatError("pose sequence fps must be positive");
    for (float v : frames)
        if (!std::isfinite(v)) throw FormatError("pose sequence contains non-finite coordinates");
}

void save_pseq(const PoseSequence& seq, const std::string& path) {
    seq.validate();
    io::BinaryWriter w(path);
    w.bytes("PSEQ", 4);
    w.u32(kPseqVersion);
    w.u32(static_cast<uint32_t>(seq.frame_count()));
    w.u32(static_cast<uint32_t>(seq.joints));
    w.u32(3);
    w.f32(seq.fps);
    w.str_u32(seq.action);
    w.str_u32(seq.subject);
    w.bytes(seq.frames.data(), seq.frames.size() * sizeof(float));
    w.close();
}

PoseSequence load_pseq(const std::string& path) {
    io::BinaryReader r(path);
    r.expect_magic("PSEQ", "pose sequence");
    uint32_t version = r.u32();
    if (version != kPseqVersion)
        throw FormatError("unsupported PSEQ version " + std::to_string(version) + " in '" +
                          path + "'");
    PoseSequence seq;
    uint32_t t = r.u32();
    seq.joints = r.u32();
    uint32_t d = r.u32();
    if (d != 3) throw FormatError("PSEQ dimension must be 3, got " + std::to_string(d));
    seq.fps = r.f32();
    seq.action = r.str_u32();
    seq.subject = r.str_u32();
    seq.frames.resize(static_cast<size_t>(t) * static_cast<size_t>(seq.joints) * 3);
    r.bytes(seq.frames.data(), seq.frames.size() * sizeof(float));
    seq.validate();
    return seq;
}

PoseSequence import_csv(const std::string& path, float fps) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    PoseSequence seq;
    seq.fps = fps;
    std::string line;
    int64_t line_no = 0;
    int64_t cols = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<float> row;
        while (std::getline(ss, cell, ',')) {
            const char* begin = cell.c_str();
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            while (end && *end == ' ') ++end;
            if (end == begin || (end && *end != '\0'))
                throw FormatError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                                  cell + "' in '" + path + "'");
            row.push_back(static_cast<float>(v));
        }
        if (cols < 0) {
            cols = static_cast<int64_t>(row.size());
            if (cols < 6 || cols % 3 != 0)
                throw FormatError("line " + std::to_string(line_no) +
                                  ": column count must be J*3 with J >= 2, got " +
                                  std::to_string(cols));
            seq.joints = cols / 3;
        } else if (static_cast<int64_t>(row.size()) != cols) {
            throw FormatError("line " + std::to_string(line_no) + ": ragged row, expected " +
                              std::to_string(cols) + " columns, got " +
                              std::to_string(row.size()));
        }
        seq.frames.insert(seq.frames.end(), row.begin(), row.end());
    }
    if (seq.frames.empty()) throw FormatError("'" + path + "' contains no frames");
    seq.validate();
    return seq;
}

PoseSequence downsample(const PoseSequence& seq, float target_fps, std::string* warning) {
    if (!(target_fps > 0)) throw FormatError("downsample: target fps must be positive");
    if (target_fps > seq.fps)
        throw FormatError("downsample: target fps exceeds source fps");
    double ratio = static_cast<double>(seq.fps) / target_fps;
    int64_t stride = std::max<int64_t>(1, static_cast<int64_t>(std::llround(ratio)));
    if (warning && std::abs(ratio - static_cast<double>(stride)) > 1e-6)
        *warning = "fps ratio " + std::to_string(ratio) +
                   " is not an integer stride; exact retiming is unsupported, keeping stride " +
                   std::to_string(stride);
    PoseSequence out;
    out.joints = seq.joints;
    out.fps = static_cast<float>(seq.fps / static_cast<double>(stride));
    out.action = seq.action;
    out.subject = seq.subject;
    int64_t t = seq.frame_count();
    for (int64_t i = 0; i < t; i += stride)
        out.frames.insert(out.frames.end(), seq.frames.begin() + i * seq.joints * 3,
                          seq.frames.begin() + (i + 1) * seq.joints * 3);
    return out;
}

int64_t window_count(int64_t total_frames, int64_t t1, int64_t t2, int64_t stride) {
    if (t1 < 1 || t2 < 1 || stride < 1) throw FormatError("window: t1, t2, stride must be >= 1");
    int64_t span = t1 + t2;
    if (total_frames < span) return 0;
    return (total_frames - span) / stride + 1;
}

std::vector<Sample> window_split(const PoseSequence& seq, int64_t t1, int64_t t2, int64_t stride,
                                 int64_t sequence_index) {
    int64_t n = window_count(seq.frame_count(), t1, t2, stride);
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(n));
    for (int64_t w = 0; w < n; ++w) {
        int64_t s = w * stride;
        Sample smp;
        smp.joints = seq.joints;
        smp.t1 = t1;
        smp.t2 = t2;
        smp.action = seq.action;
        smp.subject = seq.subject;
        smp.sequence_index = sequence_index;
        smp.window_start = s;
        auto base = seq.frames.begin() + s * seq.joints * 3;
        smp.input.assign(base, base + t1 * seq.joints * 3);
        smp.target.assign(base + t1 * seq.joints * 3, base + (t1 + t2) * seq.joints * 3);
        out.push_back(std::move(smp));
    }
    return out;
}

void AugmentationSpec::validate() const {
    if (rotation_max_deg < 0 || rotation_max_deg > 360)
        throw ConfigError("augment.rotation_max_deg must be in [0,360]");
    if (noise_rate < 0 || noise_rate > 1) throw ConfigError("augment.noise_rate must be in [0,1]");
    if (noise_sigma_mm < 0) throw ConfigError("augment.noise_sigma_mm must be >= 0");
    if (scale_lo <= 0 || scale_hi < scale_lo)
        throw ConfigError("augment.scale range must satisfy 0 < lo <= hi");
    if (translation_max_mm < 0) throw ConfigError("augment.translation_max_mm must be >= 0");
}

std::array<double, 3> last_input_centroid(const Sample& sample) {
    std::array<double, 3> c{0, 0, 0};
    int64_t base = (sample.t1 - 1) * sample.joints * 3;
    for (int64_t j = 0; j < sample.joints; ++j)
        for (int64_t d = 0; d < 3; ++d)
            c[static_cast<size_t>(d)] += sample.input[static_cast<size_t>(base + j * 3 + d)];
    for (auto& v : c) v /= static_cast<double>(sample.joints);
    return c;
}

void rotate_y_about(std::vector<float>& frames, int64_t joints, double degrees,
                    const std::array<double, 3>& center) {
    double rad = degrees * kPi / 180.0;
    double c = std::cos(rad), s = std::sin(rad);
    int64_t n = static_cast<int64_t>(frames.size()) / 3;
    (void)joints;
    for (int64_t i = 0; i < n; ++i) {
        double x = frames[i * 3 + 0] - center[0];
        double z = frames[i * 3 + 2] - center[2];
        frames[i * 3 + 0] = static_cast<float>(c * x + s * z + center[0]);
        frames[i * 3 + 2] = static_cast<float>(-s * x + c * z + center[2]);
    }
}

namespace {

void scale_about(std::vector<float>& frames, double factor, const std::array<double, 3>& center) {
    int64_t n = static_cast<int64_t>(frames.size()) / 3;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t d = 0; d < 3; ++d) {
            double v = frames[i * 3 + d] - center[static_cast<size_t>(d)];
            frames[i * 3 + d] = static_cast<float>(v * factor + center[static_cast<size_t>(d)]);
        }
}

void translate(std::vector<float>& frames, const std::array<double, 3>& t) {
    int64_t n = static_cast<int64_t>(frames.size()) / 3;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t d = 0; d < 3; ++d)
            frames[i * 3 + d] = static_cast<float>(frames[i * 3 + d] + t[static_cast<size_t>(d)]);
}

}  // namespace

void add_noise(std::vector<float>& frames, double rate, double sigma_mm, Rng& rng) {
    if (rate <= 0 || sigma_mm <= 0) return;
    int64_t n = static_cast<int64_t>(frames.size()) / 3;
    for (int64_t i = 0; i < n; ++i) {
        if (rng.uniform() >= rate) continue;
        for (int64_t d = 0; d < 3; ++d)
            frames[i * 3 + d] = static_cast<float>(frames[i * 3 + d] + rng.normal(0, sigma_mm));
    }
}

AppliedTransform augment(Sample& sample, const AugmentationSpec& spec, Rng& rng) {
    spec.validate();
    AppliedTransform tf;
    tf.center = last_input_centroid(sample);
    tf.yaw_deg = spec.rotation_max_deg > 0 ? rng.uniform(0.0, spec.rotation_max_deg) : 0.0;
    tf.scale = (spec.scale_lo == 1.0 && spec.scale_hi == 1.0)
                   ? 1.0
                   : rng.uniform(spec.scale_lo, spec.scale_hi);
    if (spec.translation_max_mm > 0)
        for (auto& v : tf.translation)
            v = rng.uniform(-spec.translation_max_mm, spec.translation_max_mm);
    if (tf.yaw_deg != 0) {
        rotate_y_about(sample.input, sample.joints, tf.yaw_deg, tf.center);
        rotate_y_about(sample.target, sample.joints, tf.yaw_deg, tf.center);
    }
    if (tf.scale != 1.0) {
        scale_about(sample.input, tf.scale, tf.center);
        scale_about(sample.target, tf.scale, tf.center);
    }
    if (spec.translation_max_mm > 0) {
        translate(sample.input, tf.translation);
        translate(sample.target, tf.translation);
    }
    add_noise(sample.input, spec.noise_rate, spec.noise_sigma_mm, rng);
    return tf;
}

const char* synth_class_name(SynthClass c) {
    switch (c) {
        case SynthClass::kCyclic: return "cyclic";
        case SynthClass::kStatic: return "static";
        case SynthClass::kSpontaneous: return "spontaneous";
    }
    return "?";
}

SynthClass synth_class_from_name(const std::string& name) {
    if (name == "cyclic") return SynthClass::kCyclic;
    if (name == "static") return SynthClass::kStatic;
    if (name == "spontaneous") return SynthClass::kSpontaneous;
    throw ConfigError("unknown synthetic class '" + name + "'");
}

namespace {

// 22-joint human-like tree, standing pose, y up, millimeters.
struct SkeletonDef {
    std::array<std::array<double, 3>, 22> base;
    // limb groups for burst perturbations
    std::vector<std::vector<int>> limbs;
};

const SkeletonDef& skeleton22() {
    static const SkeletonDef def = [] {
        SkeletonDef d;
        auto set = [&](int i, double x, double y, double z) { d.base[static_cast<size_t>(i)] = {x, y, z}; };
        set(0, 0, 1000, 0);      // pelvis
        set(1, 0, 1130, 0);      // spine
        set(2, 0, 1260, 0);      // chest
        set(3, 0, 1400, 0);      // neck
        set(4, 0, 1520, 0);      // head
        set(5, 0, 1640, 0);      // head top
        set(6, -100, 980, 0);    // l hip
        set(7, -100, 540, 0);    // l knee
        set(8, -100, 90, 0);     // l ankle
        set(9, -100, 20, 140);   // l foot
        set(10, 100, 980, 0);    // r hip
        set(11, 100, 540, 0);    // r knee
        set(12, 100, 90, 0);     // r ankle
        set(13, 100, 20, 140);   // r foot
        set(14, -190, 1350, 0);  // l shoulder
        set(15, -210, 1080, 0);  // l elbow
        set(16, -220, 820, 0);   // l wrist
        set(17, -225, 720, 0);   // l hand
        set(18, 190, 1350, 0);   // r shoulder
        set(19, 210, 1080, 0);   // r elbow
        set(20, 220, 820, 0);    // r wrist
        set(21, 225, 720, 0);    // r hand
        d.limbs = {{14, 15, 16, 17}, {18, 19, 20, 21}, {6, 7, 8, 9},
                   {10, 11, 12, 13}, {3, 4, 5}};
        return d;
    }();
    return def;
}

}  // namespace

PoseSequence synth_generate(SynthClass cls, int64_t n_frames, int64_t joints, float fps,
                            uint64_t seed) {
    if (n_frames < 1) throw ConfigError("synth: n_frames must be >= 1");
    if (joints != 22) throw ConfigError("synth: generator produces 22-joint skeletons");
    if (!(fps > 0)) throw ConfigError("synth: fps must be positive");
    const SkeletonDef& def = skeleton22();
    Rng rng(Rng::derive(seed, 0x73796eULL, static_cast<uint64_t>(cls)));

    PoseSequence seq;
    seq.joints = joints;
    seq.fps = fps;
    seq.action = synth_class_name(cls);

    // class-independent global placement so absolute position carries no label
    double gx = rng.uniform(-500.0, 500.0);
    double gz = rng.uniform(-500.0, 500.0);
    double gyaw = rng.uniform(-10.0, 10.0);

    double jitter = cls == SynthClass::kCyclic ? 1.0 : 2.0;
    seq.frames.assign(static_cast<size_t>(n_frames * joints * 3), 0.0f);

    std::vector<std::array<double, 3>> offset(static_cast<size_t>(joints), {0, 0, 0});

    // gait parameters (cyclic): period locked to 32 frames so the cycle is
    // frame-exact and never aligns with the 1 s evaluation horizon
    double leg_amp = rng.uniform(140.0, 220.0);
    double arm_amp = rng.uniform(90.0, 150.0);
    double lift_amp = rng.uniform(40.0, 80.0);
    double bob_amp = rng.uniform(10.0, 25.0);
    double sway_amp = rng.uniform(10.0, 30.0);
    double phase0 = rng.uniform(0.0, 2.0 * kPi);

    // spontaneous bursts: smoothed random walks on random limbs
    struct Burst {
        std::vector<int> joints;
        int64_t start, len;
        std::vector<std::array<double, 3>> walk;  // smoothed, per burst frame
    };
    std::vector<Burst> bursts;
    if (cls == SynthClass::kSpontaneous) {
        int n_bursts = 3 + static_cast<int>(rng.uniform_int(4));
        for (int b = 0; b < n_bursts; ++b) {
            Burst bu;
            bu.joints = def.limbs[static_cast<size_t>(rng.uniform_int(
                static_cast<int64_t>(def.limbs.size())))];
            bu.len = std::max<int64_t>(4, static_cast<int64_t>(fps * rng.uniform(0.4, 1.2)));
            bu.start = rng.uniform_int(std::max<int64_t>(1, n_frames - bu.len));
            std::vector<std::array<double, 3>> raw(static_cast<size_t>(bu.len), {0, 0, 0});
            double step = rng.uniform(25.0, 60.0);
            for (int64_t t = 1; t < bu.len; ++t)
                for (int d = 0; d < 3; ++d)
                    raw[static_cast<size_t>(t)][static_cast<size_t>(d)] =
                        raw[static_cast<size_t>(t - 1)][static_cast<size_t>(d)] +
                        rng.normal(0, step);
            // low-pass: centered moving average, then a sin^2 envelope
            bu.walk.assign(static_cast<size_t>(bu.len), {0, 0, 0});
            const int64_t w = 3;
            for (int64_t t = 0; t < bu.len; ++t) {
                std::array<double, 3> acc{0, 0, 0};
                int64_t cnt = 0;
                for (int64_t k = -w; k <= w; ++k) {
                    int64_t u = t + k;
                    if (u < 0 || u >= bu.len) continue;
                    for (int d = 0; d < 3; ++d) acc[static_cast<size_t>(d)] += raw[static_cast<size_t>(u)][static_cast<size_t>(d)];
                    ++cnt;
                }
                double env = std::sin(kPi * static_cast<double>(t) / static_cast<double>(bu.len));
                env *= env;
                for (int d = 0; d < 3; ++d)
                    bu.walk[static_cast<size_t>(t)][static_cast<size_t>(d)] =
                        env * acc[static_cast<size_t>(d)] / static_cast<double>(cnt);
            }
            bursts.push_back(std::move(bu));
        }
    }

    for (int64_t t = 0; t < n_frames; ++t) {
        for (auto& o : offset) o = {0, 0, 0};
        if (cls == SynthClass::kCyclic) {
            double phi = 2.0 * kPi * static_cast<double>(t) / 32.0 + phase0;
            double s = std::sin(phi);
            double lift_l = std::max(0.0, std::sin(phi));
            double lift_r = std::max(0.0, -std::sin(phi));
            // legs swing antiphase in z, feet lift while swinging
            for (int j : {7, 8, 9}) {
                offset[static_cast<size_t>(j)][2] += leg_amp * s;
                offset[static_cast<size_t>(j)][1] += lift_amp * lift_l;
            }
            for (int j : {11, 12, 13}) {
                offset[static_cast<size_t>(j)][2] -= leg_amp * s;
                offset[static_cast<size_t>(j)][1] += lift_amp * lift_r;
            }
            // arms counter-swing
            for (int j : {15, 16, 17}) offset[static_cast<size_t>(j)][2] -= arm_amp * s;
            for (int j : {19, 20, 21}) offset[static_cast<size_t>(j)][2] += arm_amp * s;
            // torso bob at double frequency plus lateral sway
            double bob = bob_amp * std::sin(2.0 * phi);
            double sway = sway_amp * std::sin(phi);
            for (int j = 0; j < 22; ++j) {
                offset[static_cast<size_t>(j)][1] += bob;
                offset[static_cast<size_t>(j)][0] += sway;
            }
        } else if (cls == SynthClass::kSpontaneous) {
            for (const auto& bu : bursts) {
                if (t < bu.start || t >= bu.start + bu.len) continue;
                const auto& w = bu.walk[static_cast<size_t>(t - bu.start)];
                for (int j : bu.joints)
                    for (int d = 0; d < 3; ++d)
                        offset[static_cast<size_t>(j)][static_cast<size_t>(d)] += w[static_cast<size_t>(d)];
            }
        }
        double cy = std::cos(gyaw * kPi / 180.0), sy = std::sin(gyaw * kPi / 180.0);
        for (int64_t j = 0; j < joints; ++j) {
            const auto& b = def.base[static_cast<size_t>(j)];
            const auto& o = offset[static_cast<size_t>(j)];
            double x = b[0] + o[0], y = b[1] + o[1], z = b[2] + o[2];
            double xr = cy * x + sy * z, zr = -sy * x + cy * z;
            seq.at(t, j, 0) = static_cast<float>(xr + gx + rng.normal(0, jitter));
            seq.at(t, j, 1) = static_cast<float>(y + rng.normal(0, jitter));
            seq.at(t, j, 2) = static_cast<float>(zr + gz + rng.normal(0, jitter));
        }
    }
    seq.validate();
    return seq;
}

std::vector<size_t> SequenceDataset::ids_in_split(const std::string& split) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < items.size(); ++i)
        if (items[i].split == split) out.push_back(i);
    return out;
}

void SequenceDataset::rebuild_index() {
    by_action.clear();
    for (size_t i = 0; i < items.size(); ++i) by_action[items[i].seq.action].push_back(i);
}

SequenceDataset SequenceDataset::load(const std::string& index_path) {
    std::ifstream in(index_path);
    if (!in) throw FormatError("cannot open index '" + index_path + "'");
    std::filesystem::path dir = std::filesystem::path(index_path).parent_path();
    SequenceDataset ds;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t')) f.push_back(cell);
        if (f.size() != 4)
            throw FormatError("index line " + std::to_string(line_no) +
                              ": expected path<TAB>action<TAB>subject<TAB>split");
        const std::string& split = f[3];
        if (split != "train" && split != "val" && split != "test")
            throw FormatError("index line " + std::to_string(line_no) + ": unknown split '" +
                              split + "'");
        std::filesystem::path p(f[0]);
        if (p.is_relative()) p = dir / p;
        Item item;
        item.seq = load_pseq(p.string());
        item.split = split;
        item.path = p.string();
        ds.items.push_back(std::move(item));
    }
    ds.rebuild_index();
    return ds;
}

void SequenceDataset::write_index(const std::string& index_path,
                                  const std::vector<IndexRecord>& recs) {
    std::ofstream out(index_path);
    if (!out) throw FormatError("cannot open index '" + index_path + "' for writing");
    for (const auto& r : recs)
        out << r.path << '\t' << r.action << '\t' << r.subject << '\t' << r.split << '\n';
    if (!out) throw FormatError("write error on '" + index_path + "'");
}

std::vector<Sample> make_samples(const SequenceDataset& ds, const std::string& split, int64_t t1,
                                 int64_t t2, int64_t stride) {
    std::vector<Sample> out;
    for (size_t i = 0; i < ds.items.size(); ++i) {
        if (ds.items[i].split != split) continue;
        auto w = window_split(ds.items[i].seq, t1, t2, stride, static_cast<int64_t>(i));
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

}  // namespace cistgcn::data

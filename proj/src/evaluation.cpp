#include "cistgcn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "cistgcn/training.hpp"

namespace cistgcn::evaluation {

int64_t horizon_frame_index(int horizon_ms, double fps) {
    int64_t idx = static_cast<int64_t>(std::llround(horizon_ms * fps / 1000.0));
    if (idx < 1)
        throw ConfigError("horizon " + std::to_string(horizon_ms) + "ms maps to frame 0 at " +
                          std::to_string(fps) + " fps");
    return idx;
}

const HorizonTable::Row* HorizonTable::find(const std::string& action) const {
    for (const auto& r : rows)
        if (r.action == action) return &r;
    return nullptr;
}

namespace {

std::vector<size_t> select_samples(const std::vector<data::Sample>& samples,
                                   const EvalOptions& opt) {
    std::vector<size_t> ids;
    if (opt.sampling == Sampling::kAll) {
        ids.resize(samples.size());
        for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        return ids;
    }
    std::map<std::string, std::vector<size_t>> by_action;
    for (size_t i = 0; i < samples.size(); ++i) by_action[samples[i].action].push_back(i);
    for (auto& [action, list] : by_action) {
        Rng rng(Rng::derive(opt.seed, 0x73616d70ULL, std::hash<std::string>{}(action)));
        rng.shuffle(list);
        size_t n = std::min(list.size(), static_cast<size_t>(opt.per_action_n));
        std::vector<size_t> take(list.begin(), list.begin() + static_cast<long>(n));
        std::sort(take.begin(), take.end());
        ids.insert(ids.end(), take.begin(), take.end());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Per-sample per-frame mean joint distance, f64.
void frame_errors(const data::Sample& s, const std::vector<float>& pred,
                  std::vector<double>& out) {
    out.assign(static_cast<size_t>(s.t2), 0.0);
    for (int64_t t = 0; t < s.t2; ++t) {
        double acc = 0;
        for (int64_t j = 0; j < s.joints; ++j) {
            double sq = 0;
            for (int64_t d = 0; d < 3; ++d) {
                int64_t i = (t * s.joints + j) * 3 + d;
                double diff = static_cast<double>(pred[static_cast<size_t>(i)]) -
                              s.target[static_cast<size_t>(i)];
                sq += diff * diff;
            }
            acc += std::sqrt(sq);
        }
        out[static_cast<size_t>(t)] = acc / static_cast<double>(s.joints);
    }
}

}  // namespace

HorizonTable evaluate_predictor(const std::vector<data::Sample>& samples, const Predictor& fn,
                                const std::vector<int>& horizons, double fps,
                                const EvalOptions& opt) {
    if (samples.empty()) throw FormatError("evaluate: no samples");
    for (size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            throw ConfigError("horizons must be strictly increasing");
    int64_t t2 = samples[0].t2;
    HorizonTable table;
    table.horizons_ms = horizons;
    for (int h : horizons) {
        int64_t idx = horizon_frame_index(h, fps);
        if (idx > t2)
            throw ConfigError("horizon " + std::to_string(h) + "ms maps to frame " +
                              std::to_string(idx) + " beyond t2=" + std::to_string(t2));
        table.horizon_frames.push_back(idx);
    }
    std::vector<size_t> ids = select_samples(samples, opt);
    table.total_samples = static_cast<int64_t>(ids.size());

    // per-sample per-frame errors; parallel fill, fixed-order reduce
    std::vector<std::vector<double>> errs(ids.size());
    auto run = [&](size_t begin, size_t end) {
        std::vector<float> pred;
        for (size_t k = begin; k < end; ++k) {
            fn(samples[ids[k]], pred);
            frame_errors(samples[ids[k]], pred, errs[k]);
        }
    };
    int workers = std::max(1, opt.workers);
    if (workers == 1 || ids.size() < 2) {
        run(0, ids.size());
    } else {
        std::vector<std::thread> pool;
        size_t chunk = (ids.size() + static_cast<size_t>(workers) - 1) / static_cast<size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            size_t b = static_cast<size_t>(w) * chunk;
            size_t e = std::min(ids.size(), b + chunk);
            if (b >= e) break;
            pool.emplace_back(run, b, e);
        }
        for (auto& t : pool) t.join();
    }

    std::map<std::string, std::vector<size_t>> by_action;
    for (size_t k = 0; k < ids.size(); ++k) by_action[samples[ids[k]].action].push_back(k);

    auto horizon_error = [&](const std::vector<double>& fe, size_t hi) {
        int64_t idx = table.horizon_frames[hi];
        if (!opt.average_up_to_horizon) return fe[static_cast<size_t>(idx - 1)];
        double acc = 0;
        for (int64_t t = 0; t < idx; ++t) acc += fe[static_cast<size_t>(t)];
        return acc / static_cast<double>(idx);
    };

    double whole_acc = 0;
    for (auto& [action, ks] : by_action) {
        HorizonTable::Row row;
        row.action = action;
        row.count = static_cast<int64_t>(ks.size());
        row.mpjpe.assign(horizons.size(), 0.0);
        for (size_t k : ks)
            for (size_t hi = 0; hi < horizons.size(); ++hi)
                row.mpjpe[hi] += horizon_error(errs[k], hi);
        for (auto& v : row.mpjpe) v /= static_cast<double>(ks.size());
        table.rows.push_back(std::move(row));
    }
    HorizonTable::Row avg;
    avg.action = "average";
    avg.count = table.total_samples;
    avg.mpjpe.assign(horizons.size(), 0.0);
    for (size_t k = 0; k < ids.size(); ++k) {
        for (size_t hi = 0; hi < horizons.size(); ++hi) avg.mpjpe[hi] += horizon_error(errs[k], hi);
        for (double e : errs[k]) whole_acc += e;
    }
    for (auto& v : avg.mpjpe) v /= static_cast<double>(ids.size());
    table.rows.push_back(std::move(avg));
    table.whole_window_mpjpe = whole_acc / static_cast<double>(ids.size() * static_cast<size_t>(t2));
    return table;
}

HorizonTable evaluate_model(model::CistGcn<float>& m, const std::vector<data::Sample>& samples,
                            const std::vector<int>& horizons, double fps, const EvalOptions& opt) {
    // One model clone per worker would be needed for BN-free parallel eval;
    // eval mode never mutates state, so sharing is safe here.
    Predictor fn = [&m](const data::Sample& s, std::vector<float>& pred) {
        pred = training::predict_sample(m, s);
    };
    return evaluate_predictor(samples, fn, horizons, fps, opt);
}

HorizonTable zero_velocity_baseline(const std::vector<data::Sample>& samples,
                                    const std::vector<int>& horizons, double fps,
                                    const EvalOptions& opt) {
    Predictor fn = [](const data::Sample& s, std::vector<float>& pred) {
        pred.resize(static_cast<size_t>(s.t2 * s.joints * 3));
        auto last = s.input.begin() + (s.t1 - 1) * s.joints * 3;
        for (int64_t t = 0; t < s.t2; ++t)
            std::copy(last, last + s.joints * 3, pred.begin() + t * s.joints * 3);
    };
    return evaluate_predictor(samples, fn, horizons, fps, opt);
}

SweepReport robustness_sweep(model::CistGcn<float>& m, const std::vector<data::Sample>& samples,
                             SweepKind kind, const std::vector<double>& grid,
                             double noise_sigma_mm, const EvalOptions& opt, double fps) {
    if (grid.empty()) throw ConfigError("sweep: empty grid");
    for (double v : grid) {
        if (kind == SweepKind::kRotationY && (v < 0 || v > 360))
            throw ConfigError("sweep: rotation grid must lie in [0,360]");
        if (kind == SweepKind::kNoise && (v < 0 || v > 1))
            throw ConfigError("sweep: noise rate grid must lie in [0,1]");
    }
    SweepReport rep;
    rep.kind = kind;
    rep.grid = grid;
    rep.noise_sigma_mm = kind == SweepKind::kNoise ? noise_sigma_mm : 0.0;
    std::vector<size_t> ids = select_samples(samples, opt);
    rep.samples_per_point = static_cast<int64_t>(ids.size());
    // any valid horizon works; the sweep reads the whole-window metric
    std::vector<int> horizon{static_cast<int>(std::ceil(1000.0 / fps))};

    for (size_t gi = 0; gi < grid.size(); ++gi) {
        std::vector<data::Sample> perturbed;
        perturbed.reserve(ids.size());
        for (size_t k = 0; k < ids.size(); ++k) {
            data::Sample s = samples[ids[k]];
            if (kind == SweepKind::kRotationY) {
                auto c = data::last_input_centroid(s);
                data::rotate_y_about(s.input, s.joints, grid[gi], c);
                data::rotate_y_about(s.target, s.joints, grid[gi], c);
            } else {
                Rng rng(Rng::derive(opt.seed, 0x6e6f69ULL, gi, k));
                data::add_noise(s.input, grid[gi], noise_sigma_mm, rng);
            }
            perturbed.push_back(std::move(s));
        }
        EvalOptions sub = opt;
        sub.sampling = Sampling::kAll;  // already selected
        HorizonTable t = evaluate_model(m, perturbed, horizon, fps, sub);
        rep.mpjpe.push_back(t.whole_window_mpjpe);
    }
    return rep;
}

void write_table(const HorizonTable& table, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    if (format == ReportFormat::kTsv) {
        out << "action\tcount";
        for (int h : table.horizons_ms) out << "\tmpjpe_" << h << "ms";
        out << "\n";
        for (const auto& r : table.rows) {
            out << r.action << '\t' << r.count;
            for (double v : r.mpjpe) out << '\t' << v;
            out << "\n";
        }
    } else {
        for (const auto& r : table.rows) {
            nlohmann::json j;
            j["action"] = r.action;
            j["count"] = r.count;
            for (size_t i = 0; i < table.horizons_ms.size(); ++i)
                j["h" + std::to_string(table.horizons_ms[i])] = r.mpjpe[i];
            out << j.dump() << "\n";
        }
    }
    if (!out) throw FormatError("write error on '" + path + "'");
}

void write_sweep(const SweepReport& sweep, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    const char* kind = sweep.kind == SweepKind::kRotationY ? "rotation_y" : "noise";
    if (format == ReportFormat::kTsv) {
        out << "kind\tvalue\tmpjpe\tsamples\n";
        for (size_t i = 0; i < sweep.grid.size(); ++i)
            out << kind << '\t' << sweep.grid[i] << '\t' << sweep.mpjpe[i] << '\t'
                << sweep.samples_per_point << "\n";
    } else {
        for (size_t i = 0; i < sweep.grid.size(); ++i) {
            nlohmann::json j;
            j["kind"] = kind;
            j["value"] = sweep.grid[i];
            j["mpjpe"] = sweep.mpjpe[i];
            j["samples"] = sweep.samples_per_point;
            out << j.dump() << "\n";
        }
    }
    if (!out) throw FormatError("write error on '" + path + "'");
}

}  // namespace cistgcn::evaluation

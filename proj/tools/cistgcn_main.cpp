#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cistgcn/binio.hpp"
#include "cistgcn/evaluation.hpp"
#include "cistgcn/gradcheck.hpp"
#include "cistgcn/interpret.hpp"
#include "cistgcn/runconfig.hpp"
#include "cistgcn/training.hpp"

namespace fs = std::filesystem;
using namespace cistgcn;

namespace {

// Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric failure, 5 verification failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitVerify = 5;

struct CommonOpts {
    std::string config_file;
    std::vector<std::string> sets;
    std::string seed;

    cli::RunConfig resolve() const {
        cli::RunConfig cfg;
        if (!config_file.empty()) cfg.load_file(config_file);
        for (const auto& kv : sets) cfg.set_kv(kv);
        cfg.apply_seed_flag(seed);
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "key=value config file");
    cmd->add_option("--set", opts.sets, "override a config key (key=value, repeatable)");
    cmd->add_option("--seed", opts.seed, "global seed (fallback: env CISTGCN_SEED, then 42)");
}

void log_resolved(const cli::RunConfig& cfg, const std::string& out_dir = "") {
    std::string text = cfg.resolved();
    std::cout << "-- resolved config --\n" << text << "---------------------\n";
    if (!out_dir.empty()) {
        std::ofstream f(out_dir + "/config.log");
        f << text;
    }
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

int cmd_synth(const CommonOpts& common, const std::string& out_dir, int64_t count,
              int64_t frames, const std::string& classes_csv, double fps) {
    cli::RunConfig cfg = common.resolve();
    log_resolved(cfg);
    std::vector<data::SynthClass> classes;
    {
        std::stringstream ss(classes_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) classes.push_back(data::synth_class_from_name(tok));
    }
    if (classes.empty()) throw ConfigError("no synthetic classes given");
    fs::create_directories(out_dir);
    uint64_t seed = cfg.seed();
    std::vector<data::SequenceDataset::IndexRecord> recs;
    for (int64_t i = 0; i < count; ++i) {
        data::SynthClass cls = classes[static_cast<size_t>(i) % classes.size()];
        data::PoseSequence seq =
            data::synth_generate(cls, frames, 22, static_cast<float>(fps), seed + static_cast<uint64_t>(i));
        seq.subject = "s" + std::to_string(1 + (i % 10));
        char name[64];
        std::snprintf(name, sizeof(name), "seq_%05d.pseq", static_cast<int>(i));
        data::save_pseq(seq, out_dir + "/" + name);
        // 70/15/15 split, deterministic round robin over a 20-slot wheel
        int slot = static_cast<int>(i % 20);
        std::string split = slot < 14 ? "train" : (slot < 17 ? "val" : "test");
        recs.push_back({name, seq.action, seq.subject, split});
    }
    data::SequenceDataset::write_index(out_dir + "/index.tsv", recs);
    std::cout << "wrote " << count << " sequences + index to " << out_dir << "\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& common, const std::string& data_index,
              const std::string& out_dir, const std::string& resume) {
    cli::RunConfig cfg = common.resolve();
    fs::create_directories(out_dir);
    log_resolved(cfg, out_dir);
    model::ModelConfig mcfg = cfg.model_config();
    training::TrainConfig tcfg = cfg.train_config();
    tcfg.checkpoint_dir = out_dir;

    data::SequenceDataset ds = data::SequenceDataset::load(data_index);
    auto train_samples = data::make_samples(ds, "train", mcfg.t1, mcfg.t2, tcfg.stride);
    auto val_samples = data::make_samples(ds, "val", mcfg.t1, mcfg.t2, tcfg.stride);
    if (train_samples.empty()) throw FormatError("no training windows in '" + data_index + "'");
    std::cout << "train windows: " << train_samples.size()
              << ", val windows: " << val_samples.size() << "\n";

    model::CistGcn<float> m = model::CistGcn<float>::create(mcfg);
    int64_t start_epoch = 0;
    training::AdamState resume_opt;
    bool has_resume_opt = false;
    if (!resume.empty()) {
        auto loaded = training::load_checkpoint(resume);
        m = std::move(loaded.model);
        start_epoch = loaded.meta.epoch;
        if (loaded.has_opt) {
            resume_opt = std::move(loaded.opt);
            has_resume_opt = true;
        }
        std::cout << "resumed from '" << resume << "' at epoch " << start_epoch << "\n";
    }
    training::Trainer trainer(m, tcfg);
    if (has_resume_opt) trainer.optimizer() = std::move(resume_opt);

    std::ofstream log(out_dir + "/train.log", std::ios::app);
    for (int64_t epoch = start_epoch; epoch < tcfg.epochs; ++epoch) {
        auto rep = trainer.train_epoch(train_samples, val_samples, epoch);
        log << (epoch + 1) << "\ttrain\t" << rep.train_mpjpe << "\t" << rep.lr << "\t"
            << rep.seconds << "\n";
        if (!val_samples.empty())
            log << (epoch + 1) << "\tval\t" << rep.val_mpjpe << "\t" << rep.lr << "\t"
                << rep.seconds << "\n";
        log.flush();
        std::cout << "epoch " << (epoch + 1) << "/" << tcfg.epochs
                  << " train=" << rep.train_mpjpe << " val=" << rep.val_mpjpe
                  << " lr=" << rep.lr << " gnorm=" << rep.grad_norm_mean << " ("
                  << rep.seconds << "s)\n";
        if ((epoch + 1) % tcfg.checkpoint_every == 0 || epoch + 1 == tcfg.epochs) {
            training::CheckpointMeta meta;
            meta.model_cfg = mcfg;
            meta.epoch = epoch + 1;
            meta.rng0 = Rng::derive(tcfg.seed, 0x726e67ULL, static_cast<uint64_t>(epoch + 1));
            meta.rng1 = Rng::derive(meta.rng0, 0x32ULL);
            char name[64];
            std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", static_cast<int>(epoch + 1));
            training::save_checkpoint(out_dir + "/" + name, m, &trainer.optimizer(), meta);
        }
    }
    std::cout << "training done; checkpoints in " << out_dir << "\n";
    return kExitOk;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint,
             const std::string& data_index, const std::string& split, const std::string& out,
             const std::string& format, const std::string& sampling_flag,
             const std::string& horizons_flag, int workers) {
    cli::RunConfig cfg = common.resolve();
    if (!sampling_flag.empty()) cfg.set("eval.sampling", sampling_flag);
    if (!horizons_flag.empty()) cfg.set("eval.horizons", horizons_flag);
    if (workers > 0) cfg.set("eval.workers", std::to_string(workers));
    log_resolved(cfg);
    auto loaded = training::load_checkpoint(checkpoint);
    data::SequenceDataset ds = data::SequenceDataset::load(data_index);
    auto samples = data::make_samples(ds, split, loaded.meta.model_cfg.t1,
                                      loaded.meta.model_cfg.t2, cfg.train_config().stride);
    if (samples.empty()) throw FormatError("no samples in split '" + split + "'");
    auto table = evaluation::evaluate_model(loaded.model, samples, cfg.horizons(),
                                            cfg.data_fps(), cfg.eval_options());
    auto fmt = format == "jsonl" ? evaluation::ReportFormat::kJsonLines
                                 : evaluation::ReportFormat::kTsv;
    evaluation::write_table(table, out, fmt);
    std::cout << "average whole-window MPJPE: " << table.whole_window_mpjpe << " mm over "
              << table.total_samples << " samples -> " << out << "\n";
    return kExitOk;
}

int cmd_sweep(const CommonOpts& common, const std::string& checkpoint,
              const std::string& data_index, const std::string& split, const std::string& kind,
              const std::string& grid_csv, const std::string& out, const std::string& format,
              int workers) {
    cli::RunConfig cfg = common.resolve();
    if (workers > 0) cfg.set("eval.workers", std::to_string(workers));
    log_resolved(cfg);
    auto loaded = training::load_checkpoint(checkpoint);
    data::SequenceDataset ds = data::SequenceDataset::load(data_index);
    auto samples = data::make_samples(ds, split, loaded.meta.model_cfg.t1,
                                      loaded.meta.model_cfg.t2, cfg.train_config().stride);
    if (samples.empty()) throw FormatError("no samples in split '" + split + "'");
    evaluation::SweepKind k;
    std::string grid = grid_csv;
    if (kind == "rotation_y") {
        k = evaluation::SweepKind::kRotationY;
        if (grid.empty()) grid = "0,45,90,135,180,225,270,315,360";
    } else if (kind == "noise") {
        k = evaluation::SweepKind::kNoise;
        if (grid.empty()) grid = "0,0.04,0.08,0.12,0.16,0.2";
    } else {
        throw ConfigError("--kind must be rotation_y or noise");
    }
    auto rep = evaluation::robustness_sweep(loaded.model, samples, k, parse_grid(grid),
                                            cfg.sweep_noise_sigma(), cfg.eval_options(),
                                            cfg.data_fps());
    auto fmt = format == "jsonl" ? evaluation::ReportFormat::kJsonLines
                                 : evaluation::ReportFormat::kTsv;
    evaluation::write_sweep(rep, out, fmt);
    std::cout << "sweep (" << kind << ") over " << rep.grid.size() << " points -> " << out
              << "\n";
    return kExitOk;
}

int cmd_interpret(const CommonOpts& common, const std::string& checkpoint,
                  const std::string& data_index, const std::string& split,
                  const std::string& out_dir) {
    cli::RunConfig cfg = common.resolve();
    fs::create_directories(out_dir);
    log_resolved(cfg, out_dir);
    auto loaded = training::load_checkpoint(checkpoint);
    data::SequenceDataset ds = data::SequenceDataset::load(data_index);
    auto samples = data::make_samples(ds, split, loaded.meta.model_cfg.t1,
                                      loaded.meta.model_cfg.t2, cfg.train_config().stride);
    if (samples.empty()) throw FormatError("no samples in split '" + split + "'");

    auto records = interpret::importance_table(loaded.model, samples);
    interpret::write_importance_tsv(out_dir + "/importance.tsv", records);

    auto report = interpret::centroid_analysis(records);
    interpret::write_centroids_tsv(out_dir + "/centroids.tsv", report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    std::vector<std::vector<double>> vecs;
    for (const auto& r : records) vecs.push_back(r.vec);
    auto coords = interpret::pca_project(vecs, cfg.seed());
    interpret::write_pca_tsv(out_dir + "/pca.tsv", records, coords);

    // per-sample bundles for the first N samples plus per-layer averages
    int64_t max_bundles = cfg.interpret_max_bundles();
    std::vector<model::Interpretation> bundles;
    for (size_t i = 0; i < samples.size(); ++i) {
        auto b = interpret::extract_bundle(loaded.model, samples[i]);
        if (static_cast<int64_t>(i) < max_bundles)
            interpret::export_bundle(out_dir + "/bundle_" + std::to_string(i), b.bundle);
        bundles.push_back(std::move(b.bundle));
    }
    fs::create_directories(out_dir + "/layer_avg");
    std::ofstream manifest(out_dir + "/layer_avg/manifest.tsv");
    for (const auto& map : bundles[0].maps) {
        auto avg = interpret::layer_average(bundles, map.name);
        io::tnsr_write(out_dir + "/layer_avg/" + map.name + ".tnsr", {avg.rows, avg.cols},
                       avg.values);
        manifest << avg.layer << '\t' << avg.rows << '\t' << avg.cols << '\t' << avg.mean << '\t'
                 << avg.stddev << "\n";
    }
    if (report.separation)
        std::cout << "importance separation score: " << *report.separation << "\n";
    std::cout << "interpretability exports in " << out_dir << "\n";
    return kExitOk;
}

int cmd_predict(const CommonOpts& common, const std::string& checkpoint,
                const std::string& input, const std::string& out) {
    cli::RunConfig cfg = common.resolve();
    log_resolved(cfg);
    auto loaded = training::load_checkpoint(checkpoint);
    const auto& mc = loaded.meta.model_cfg;
    data::PoseSequence seq = data::load_pseq(input);
    if (seq.joints != mc.joints)
        throw FormatError("input has " + std::to_string(seq.joints) + " joints, model expects " +
                          std::to_string(mc.joints));
    if (seq.frame_count() < mc.t1)
        throw FormatError("input has " + std::to_string(seq.frame_count()) +
                          " frames, model needs at least " + std::to_string(mc.t1));
    data::Sample s;
    s.joints = seq.joints;
    s.t1 = mc.t1;
    s.t2 = mc.t2;
    s.action = seq.action;
    s.subject = seq.subject;
    int64_t start = seq.frame_count() - mc.t1;
    s.input.assign(seq.frames.begin() + start * seq.joints * 3, seq.frames.end());
    s.target.assign(static_cast<size_t>(mc.t2 * seq.joints * 3), 0.0f);
    auto pred = training::predict_sample(loaded.model, s);
    data::PoseSequence out_seq;
    out_seq.joints = seq.joints;
    out_seq.fps = seq.fps;
    out_seq.action = seq.action;
    out_seq.subject = seq.subject;
    out_seq.frames = std::move(pred);
    data::save_pseq(out_seq, out);
    std::cout << "wrote " << mc.t2 << "-frame prediction to " << out << "\n";
    return kExitOk;
}

int cmd_gradcheck(const CommonOpts& common) {
    cli::RunConfig cfg = common.resolve();
    log_resolved(cfg);
    bool ok = gradcheck::run_full_verification(cfg.seed());
    if (!ok) throw Error("verify", "gradient verification failed");
    std::cout << "all gradient checks passed\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIST-GCN human motion forecasting"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* synth = app.add_subcommand("synth", "generate a synthetic PSEQ dataset + index");
    std::string synth_out = "synth_data";
    int64_t synth_count = 600, synth_frames = 40;
    std::string synth_classes = "cyclic,static,spontaneous";
    double synth_fps = 25.0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--count", synth_count, "number of sequences");
    synth->add_option("--frames", synth_frames, "frames per sequence");
    synth->add_option("--classes", synth_classes, "comma list: cyclic,static,spontaneous");
    synth->add_option("--fps", synth_fps, "frame rate");
    add_common(synth, common);

    auto* train = app.add_subcommand("train", "train a model");
    std::string train_data, train_out = "run", train_resume;
    train->add_option("--data", train_data, "dataset index file")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--resume", train_resume, "checkpoint to resume from");
    add_common(train, common);

    auto* eval = app.add_subcommand("eval", "horizon MPJPE table");
    std::string eval_ckpt, eval_data, eval_split = "test", eval_out = "eval.tsv";
    std::string eval_format = "tsv", eval_sampling, eval_horizons;
    int eval_workers = 0;
    eval->add_option("--checkpoint", eval_ckpt)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--split", eval_split, "train/val/test");
    eval->add_option("--out", eval_out)->required();
    eval->add_option("--format", eval_format, "tsv or jsonl");
    eval->add_option("--sampling", eval_sampling, "all or per_action_fixed");
    eval->add_option("--horizons", eval_horizons, "comma list of horizons in ms");
    eval->add_option("--workers", eval_workers, "parallel eval workers");
    add_common(eval, common);

    auto* sweep = app.add_subcommand("sweep", "robustness sweep (rotation/noise)");
    std::string sweep_ckpt, sweep_data, sweep_split = "test", sweep_kind = "rotation_y";
    std::string sweep_grid, sweep_out = "sweep.tsv", sweep_format = "tsv";
    int sweep_workers = 0;
    sweep->add_option("--checkpoint", sweep_ckpt)->required();
    sweep->add_option("--data", sweep_data)->required();
    sweep->add_option("--split", sweep_split);
    sweep->add_option("--kind", sweep_kind, "rotation_y or noise")->required();
    sweep->add_option("--grid", sweep_grid, "comma list of grid values");
    sweep->add_option("--out", sweep_out)->required();
    sweep->add_option("--format", sweep_format, "tsv or jsonl");
    sweep->add_option("--workers", sweep_workers);
    add_common(sweep, common);

    auto* interp = app.add_subcommand("interpret", "export adjacency bundles + importance tables");
    std::string it_ckpt, it_data, it_split = "test", it_out = "interpret_out";
    interp->add_option("--checkpoint", it_ckpt)->required();
    interp->add_option("--data", it_data)->required();
    interp->add_option("--split", it_split);
    interp->add_option("--out", it_out)->required();
    add_common(interp, common);

    auto* predict = app.add_subcommand("predict", "predict future frames for a PSEQ file");
    std::string pr_ckpt, pr_in, pr_out;
    predict->add_option("--checkpoint", pr_ckpt)->required();
    predict->add_option("--input", pr_in)->required();
    predict->add_option("--out", pr_out)->required();
    add_common(predict, common);

    auto* gc = app.add_subcommand("gradcheck", "finite-difference verification suite");
    add_common(gc, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(common, synth_out, synth_count, synth_frames, synth_classes,
                             synth_fps);
        if (train->parsed()) return cmd_train(common, train_data, train_out, train_resume);
        if (eval->parsed())
            return cmd_eval(common, eval_ckpt, eval_data, eval_split, eval_out, eval_format,
                            eval_sampling, eval_horizons, eval_workers);
        if (sweep->parsed())
            return cmd_sweep(common, sweep_ckpt, sweep_data, sweep_split, sweep_kind, sweep_grid,
                             sweep_out, sweep_format, sweep_workers);
        if (interp->parsed()) return cmd_interpret(common, it_ckpt, it_data, it_split, it_out);
        if (predict->parsed()) return cmd_predict(common, pr_ckpt, pr_in, pr_out);
        if (gc->parsed()) return cmd_gradcheck(common);
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        if (e.category() == "usage") return kExitUsage;
        if (e.category() == "numeric") return kExitNumeric;
        if (e.category() == "verify") return kExitVerify;
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

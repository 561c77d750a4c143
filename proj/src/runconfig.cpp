#include "cistgcn/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cistgcn::cli {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"seed", ""},  // empty -> env CISTGCN_SEED or 42
        {"model.t1", "10"},
        {"model.t2", "25"},
        {"model.joints", "22"},
        {"model.channels", "32"},
        {"model.encoder_depth", "5"},
        {"model.dilations", "1,2,3"},
        {"train.epochs", "50"},
        {"train.batch_size", "32"},
        {"train.learning_rate", "0.001"},
        {"train.lr_decay_factor", "0.5"},
        {"train.lr_decay_interval", "0"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.adam_eps", "1e-8"},
        {"train.grad_clip", "5.0"},
        {"train.stride", "5"},
        {"train.checkpoint_every", "1"},
        {"train.aug.rotation_max_deg", "0"},
        {"train.aug.noise_rate", "0"},
        {"train.aug.noise_sigma_mm", "25"},
        {"train.aug.scale_lo", "1"},
        {"train.aug.scale_hi", "1"},
        {"train.aug.translation_max_mm", "0"},
        {"data.fps", "25"},
        {"eval.horizons", "80,160,320,400,560,720,880,1000"},
        {"eval.sampling", "all"},
        {"eval.per_action_n", "256"},
        {"eval.workers", "1"},
        {"eval.average_up_to_horizon", "0"},
        {"sweep.noise_sigma_mm", "25"},
        {"interpret.max_bundles", "8"},
    };
    return defaults;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

void RunConfig::set_kv(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set(kv.substr(0, eq), kv.substr(eq + 1));
}

void RunConfig::apply_seed_flag(const std::string& seed_flag_value) {
    if (!seed_flag_value.empty()) values_["seed"] = seed_flag_value;
}

std::string RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

int64_t RunConfig::get_int(const std::string& key) const {
    try {
        return std::stoll(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: '" + get(key) + "'");
    }
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: '" + get(key) + "'");
    }
}

uint64_t RunConfig::seed() const {
    std::string s = get("seed");
    if (s.empty()) {
        const char* env = std::getenv("CISTGCN_SEED");
        if (env && *env) s = env;
    }
    if (s.empty()) return 42;
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ConfigError("seed must be a non-negative integer, got '" + s + "'");
    }
}

model::ModelConfig RunConfig::model_config() const {
    model::ModelConfig cfg;
    cfg.t1 = get_int("model.t1");
    cfg.t2 = get_int("model.t2");
    cfg.joints = get_int("model.joints");
    cfg.channels = get_int("model.channels");
    cfg.encoder_depth = get_int("model.encoder_depth");
    cfg.dilations.clear();
    for (const auto& tok : split_csv(get("model.dilations")))
        cfg.dilations.push_back(std::stoi(tok));
    cfg.seed = seed();
    cfg.validate();
    return cfg;
}

training::TrainConfig RunConfig::train_config() const {
    training::TrainConfig cfg;
    cfg.epochs = get_int("train.epochs");
    cfg.batch_size = get_int("train.batch_size");
    cfg.learning_rate = get_double("train.learning_rate");
    cfg.lr_decay_factor = get_double("train.lr_decay_factor");
    cfg.lr_decay_interval = get_int("train.lr_decay_interval");
    cfg.beta1 = get_double("train.beta1");
    cfg.beta2 = get_double("train.beta2");
    cfg.adam_eps = get_double("train.adam_eps");
    cfg.grad_clip = get_double("train.grad_clip");
    cfg.stride = get_int("train.stride");
    cfg.checkpoint_every = get_int("train.checkpoint_every");
    cfg.augmentation.rotation_max_deg = get_double("train.aug.rotation_max_deg");
    cfg.augmentation.noise_rate = get_double("train.aug.noise_rate");
    cfg.augmentation.noise_sigma_mm = get_double("train.aug.noise_sigma_mm");
    cfg.augmentation.scale_lo = get_double("train.aug.scale_lo");
    cfg.augmentation.scale_hi = get_double("train.aug.scale_hi");
    cfg.augmentation.translation_max_mm = get_double("train.aug.translation_max_mm");
    cfg.seed = seed();
    cfg.validate();
    return cfg;
}

evaluation::EvalOptions RunConfig::eval_options() const {
    evaluation::EvalOptions opt;
    std::string sampling = get("eval.sampling");
    if (sampling == "all")
        opt.sampling = evaluation::Sampling::kAll;
    else if (sampling == "per_action_fixed")
        opt.sampling = evaluation::Sampling::kPerActionFixed;
    else
        throw ConfigError("eval.sampling must be 'all' or 'per_action_fixed'");
    opt.per_action_n = get_int("eval.per_action_n");
    opt.workers = static_cast<int>(get_int("eval.workers"));
    opt.average_up_to_horizon = get_int("eval.average_up_to_horizon") != 0;
    opt.seed = seed();
    return opt;
}

std::vector<int> RunConfig::horizons() const {
    std::vector<int> out;
    for (const auto& tok : split_csv(get("eval.horizons"))) out.push_back(std::stoi(tok));
    if (out.empty()) throw ConfigError("eval.horizons must be non-empty");
    return out;
}

double RunConfig::data_fps() const { return get_double("data.fps"); }
double RunConfig::sweep_noise_sigma() const { return get_double("sweep.noise_sigma_mm"); }
int64_t RunConfig::interpret_max_bundles() const { return get_int("interpret.max_bundles"); }

std::string RunConfig::resolved() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) {
        if (k == "seed") {
            os << "seed=" << seed() << "\n";
        } else {
            os << k << "=" << v << "\n";
        }
    }
    return os.str();
}

}  // namespace cistgcn::cli

#pragma once

#include <map>
#include <string>
#include <vector>

#include "cistgcn/data.hpp"
#include "cistgcn/evaluation.hpp"
#include "cistgcn/model.hpp"
#include "cistgcn/training.hpp"

namespace cistgcn::cli {

// Flat key=value configuration with dotted section prefixes (model.*, train.*,
// eval.*, ...). Unknown keys are rejected; precedence is defaults < config
// file < --set overrides < dedicated flags.
class RunConfig {
public:
    RunConfig();  // defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void set_kv(const std::string& kv);  // "key=value"

    // seed resolution: --seed flag > config "seed" > env CISTGCN_SEED > 42
    void apply_seed_flag(const std::string& seed_flag_value);

    uint64_t seed() const;
    model::ModelConfig model_config() const;
    training::TrainConfig train_config() const;
    evaluation::EvalOptions eval_options() const;
    std::vector<int> horizons() const;
    double data_fps() const;
    double sweep_noise_sigma() const;
    int64_t interpret_max_bundles() const;

    std::string get(const std::string& key) const;
    int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;

    // Every effective key, sorted, one per line: "key=value".
    std::string resolved() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace cistgcn::cli

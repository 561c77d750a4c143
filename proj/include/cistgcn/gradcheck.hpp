#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cistgcn/model.hpp"

namespace cistgcn::gradcheck {

struct CheckResult {
    std::string name;
    double max_rel_err = 0;
    double tolerance = 0;
    bool passed() const { return max_rel_err < tolerance; }
};

struct Report {
    std::vector<CheckResult> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed()) return false;
        return true;
    }
    double worst() const {
        double w = 0;
        for (const auto& c : checks) w = std::max(w, c.max_rel_err);
        return w;
    }
};

// Central-difference Jacobian-vector check of a scalar-valued closure against
// the tape gradient; h = cbrt(machine eps) * max(1, |x|). Relative error uses
// a unit floor: |ad - fd| / max(1, |ad|, |fd|). max_per_input < 0 checks every
// element; otherwise a seeded random subset.
template <typename T>
double check_closure(const std::function<Tensor<T>()>& forward, std::vector<Tensor<T>> inputs,
                     int64_t max_per_input = -1, uint64_t seed = 0);

// Every op primitive on `n_shapes` random shapes per op.
template <typename T>
Report run_op_suite(int n_shapes, double tolerance, uint64_t seed);

// Full-model finite differences over `n_params` sampled parameters, f64.
Report run_model_check(const model::ModelConfig& cfg, int64_t n_params, double tolerance,
                       uint64_t seed);

// The cmd_gradcheck suite: op-level (f64, 1e-7) + full M8 model (1e-3).
// Prints one line per check to stdout; returns false on any failure.
bool run_full_verification(uint64_t seed);

}  // namespace cistgcn::gradcheck

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vadd/param_store.hpp"

namespace vadd::ad {

// Builds a scalar loss from the parameters. Must be deterministic and must
// not mutate the store; it is re-evaluated many times under perturbation.
using LossBuilder = std::function<Tensor(Tape&, ParamStore&)>;

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    bool all_pass = true;
    double worst = 0.0;
    std::string worst_name;
};

// Compares analytic gradients against central finite differences
// (f(x+h) - f(x-h)) / 2h, elementwise per parameter. Relative error uses
// max(|analytic|, |fd|, 1e-8) as denominator.
GradCheckReport grad_check(const LossBuilder& builder, ParamStore& params,
                           double tolerance = 1e-4, double fd_step = 1e-5);

} // namespace vadd::ad

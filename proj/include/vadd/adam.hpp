#pragma once

#include <map>
#include <string>
#include <vector>

#include "vadd/param_store.hpp"

namespace vadd::ad {

// Adam with bias correction and a step-decay learning-rate schedule:
// effective lr at 0-based epoch e is lr0 / decay_factor^floor(e / epochs_per_decay).
struct AdamState {
    double lr0 = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs_per_decay = 5;
    double decay_factor = 3.0;
    uint64_t step = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

double effective_lr(const AdamState& state, int epoch);

// One update over every entry of params using the gradients accumulated by
// backward(). Gradients are zeroed afterwards.
void adam_step(ParamStore& params, AdamState& state, int epoch);

// Scale every gradient by c (batch averaging before adam_step).
void scale_grads(ParamStore& params, double c);

// Global-norm gradient clipping; no-op when max_norm <= 0.
void clip_grads(ParamStore& params, double max_norm);

} // namespace vadd::ad

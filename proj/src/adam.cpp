#include "vadd/adam.hpp"

#include <cmath>

namespace vadd::ad {

double effective_lr(const AdamState& state, int epoch) {
    if (epoch < 0) fail("adam: negative epoch ", epoch);
    const int k = state.epochs_per_decay > 0 ? epoch / state.epochs_per_decay : 0;
    double divisor = 1.0;
    for (int i = 0; i < k; ++i) divisor *= state.decay_factor;
    return state.lr0 / divisor;
}

void adam_step(ParamStore& params, AdamState& state, int epoch) {
    const double lr = effective_lr(state, epoch);
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (auto& [name, t] : params) {
        if (!t.has_grad())
            fail("adam: parameter '", name, "' has no gradient");
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.size() != t.data().size()) m.assign(t.data().size(), 0.0);
        if (v.size() != t.data().size()) v.assign(t.data().size(), 0.0);

        auto& x = t.data();
        auto& g = t.grad();
        for (size_t i = 0; i < x.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            x[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        t.zero_grad();
    }
}

void scale_grads(ParamStore& params, double c) {
    for (auto& [name, t] : params) {
        if (!t.has_grad()) fail("grads: parameter '", name, "' has no gradient");
        for (double& g : t.grad()) g *= c;
    }
}

void clip_grads(ParamStore& params, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (auto& [name, t] : params) {
        if (!t.has_grad()) fail("grads: parameter '", name, "' has no gradient");
        for (double g : t.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double c = max_norm / norm;
    for (auto& [name, t] : params)
        for (double& g : t.grad()) g *= c;
}

} // namespace vadd::ad

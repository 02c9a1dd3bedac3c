#include "vadd/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace vadd::ad {

GradCheckReport grad_check(const LossBuilder& builder, ParamStore& params,
                           double tolerance, double fd_step) {
    params.zero_grads();
    std::map<std::string, std::vector<double>> analytic;
    {
        Tape tape(true);
        Tensor loss = builder(tape, params);
        tape.backward(loss);
        for (auto& [name, t] : params) analytic[name] = t.grad();
        params.zero_grads();
    }

    auto eval = [&]() {
        Tape tape(false);
        return builder(tape, params).value();
    };

    GradCheckReport report;
    for (auto& [name, t] : params) {
        GradCheckEntry entry;
        entry.name = name;
        auto& x = t.data();
        const auto& a = analytic.at(name);
        for (size_t i = 0; i < x.size(); ++i) {
            const double saved = x[i];
            x[i] = saved + fd_step;
            const double fp = eval();
            x[i] = saved - fd_step;
            const double fm = eval();
            x[i] = saved;
            const double fd = (fp - fm) / (2.0 * fd_step);
            const double denom = std::max({std::fabs(a[i]), std::fabs(fd), 1e-8});
            const double rel = std::fabs(a[i] - fd) / denom;
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        entry.pass = entry.max_rel_err <= tolerance;
        if (!entry.pass) report.all_pass = false;
        if (entry.max_rel_err > report.worst) {
            report.worst = entry.max_rel_err;
            report.worst_name = name;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace vadd::ad

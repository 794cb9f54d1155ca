#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "graphnav/autodiff.hpp"

namespace graphnav {

// A deterministic scalar-loss fragment built on a fresh tape from the store's
// current parameter values.
using LossFragment = std::function<Var(Graph&, ParameterStore&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double analytic = 0.0, numeric = 0.0;
};

// Relative error with a floor: tiny gradients are compared on an absolute
// scale so finite-difference roundoff does not dominate.
inline double grad_rel_error(double analytic, double numeric) {
    const double diff = std::fabs(analytic - numeric);
    if (diff == 0.0) return 0.0;
    const double denom = std::max(std::fabs(analytic) + std::fabs(numeric), 1e-4);
    return diff / denom;
}

// Compares analytic gradients against central finite differences (step h) for
// every element of every parameter in the store.
inline GradCheckResult gradient_check(ParameterStore& ps, const LossFragment& fragment,
                                      double h = 1e-5) {
    auto eval = [&]() {
        Graph g;
        Var loss = fragment(g, ps);
        require(g.length(loss) == 1, "gradient_check: fragment must produce a scalar");
        return g.val0(loss);
    };

    // Analytic pass.
    ps.zero_grads();
    {
        Graph g;
        Var loss = fragment(g, ps);
        require(g.length(loss) == 1, "gradient_check: fragment must produce a scalar");
        g.backward(loss);
    }

    GradCheckResult res;
    for (auto& [name, e] : ps) {
        for (int64_t i = 0; i < e.value.size(); ++i) {
            double& x = e.value.data[static_cast<size_t>(i)];
            const double saved = x;
            x = saved + h;
            const double up = eval();
            x = saved - h;
            const double dn = eval();
            x = saved;
            const double numeric = (up - dn) / (2.0 * h);
            const double analytic = e.grad.data[static_cast<size_t>(i)];
            const double rel = grad_rel_error(analytic, numeric);
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = name;
                res.worst_index = static_cast<int>(i);
                res.analytic = analytic;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

}  // namespace graphnav

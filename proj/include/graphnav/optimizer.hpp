#pragma once

#include <cmath>
#include <map>
#include <string>

#include "graphnav/autodiff.hpp"

namespace graphnav {

// Adam with bias correction. Moment buffers are keyed by parameter name and
// swept in sorted-name order, so updates are deterministic.
class AdamOptimizer {
  public:
    struct Hyper {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double grad_clip_norm = 0.0;  // 0 disables clipping
    };

    AdamOptimizer() = default;
    explicit AdamOptimizer(Hyper hp) : hp_(hp) {}

    void set_hyper(Hyper hp) { hp_ = hp; }
    const Hyper& hyper() const { return hp_; }

    // One update over every parameter with a populated gradient; zeroes the
    // gradient accumulators afterwards.
    void step(ParameterStore& ps, double lr) {
        ++t_;
        double clip_scale = 1.0;
        if (hp_.grad_clip_norm > 0.0) {
            double sq = 0.0;
            for (auto& [name, e] : ps)
                for (double gv : e.grad.data) sq += gv * gv;
            const double norm = std::sqrt(sq);
            if (norm > hp_.grad_clip_norm) clip_scale = hp_.grad_clip_norm / norm;
        }
        const double bc1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
        for (auto& [name, e] : ps) {
            Moments& mo = moments_[name];
            if (mo.m.data.empty()) {
                mo.m = Tensor::zeros(e.value.shape);
                mo.v = Tensor::zeros(e.value.shape);
            }
            for (int64_t i = 0; i < e.value.size(); ++i) {
                const double gv = e.grad.data[static_cast<size_t>(i)] * clip_scale;
                if (std::isnan(gv))
                    throw error("adam: NaN gradient in parameter '" + name + "'");
                double& m = mo.m.data[static_cast<size_t>(i)];
                double& v = mo.v.data[static_cast<size_t>(i)];
                m = hp_.beta1 * m + (1.0 - hp_.beta1) * gv;
                v = hp_.beta2 * v + (1.0 - hp_.beta2) * gv * gv;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                e.value.data[static_cast<size_t>(i)] -= lr * mhat / (std::sqrt(vhat) + hp_.eps);
                e.grad.data[static_cast<size_t>(i)] = 0.0;
            }
        }
    }

    int64_t steps_taken() const { return t_; }

    struct Moments {
        Tensor m, v;
    };
    std::map<std::string, Moments>& state() { return moments_; }
    const std::map<std::string, Moments>& state() const { return moments_; }
    void set_steps_taken(int64_t t) { t_ = t; }

  private:
    Hyper hp_{};
    int64_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace graphnav

#pragma once

#include <cmath>
#include <vector>

#include "stereo/core/errors.hpp"

namespace stereo::diffusion {

template <class S>
struct ParamView {
    S* data;
    long size;
};

// Plain SGD. Views must be passed in the same order every step.
template <class S>
class SgdOptimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) {}

    void step(const std::vector<ParamView<S>>& params, const std::vector<ParamView<S>>& grads) {
        require(params.size() == grads.size(), "optimizer views misaligned");
        for (std::size_t i = 0; i < params.size(); ++i)
            for (long k = 0; k < params[i].size; ++k)
                params[i].data[k] -= static_cast<S>(lr_) * grads[i].data[k];
    }

private:
    double lr_;
};

template <class S>
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void set_lr(double lr) { lr_ = lr; }

    void step(const std::vector<ParamView<S>>& params, const std::vector<ParamView<S>>& grads) {
        require(params.size() == grads.size(), "optimizer views misaligned");
        if (slots_.empty()) {
            slots_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                slots_[i].m.assign(static_cast<std::size_t>(params[i].size), 0.0);
                slots_[i].v.assign(static_cast<std::size_t>(params[i].size), 0.0);
            }
        }
        require(slots_.size() == params.size(), "optimizer state does not match parameter list");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& slot = slots_[i];
            for (long k = 0; k < params[i].size; ++k) {
                const double g = static_cast<double>(grads[i].data[k]);
                double& m = slot.m[static_cast<std::size_t>(k)];
                double& v = slot.v[static_cast<std::size_t>(k)];
                m = beta1_ * m + (1.0 - beta1_) * g;
                v = beta2_ * v + (1.0 - beta2_) * g * g;
                const double update = lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
                params[i].data[k] -= static_cast<S>(update);
            }
        }
    }

private:
    struct Slot {
        std::vector<double> m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Slot> slots_;
};

} // namespace stereo::diffusion

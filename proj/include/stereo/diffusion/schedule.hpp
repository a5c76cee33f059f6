#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "stereo/core/errors.hpp"

namespace stereo::diffusion {

// Linear-beta forward process. Derived arrays are recomputed from the betas,
// which are the only stored quantity.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    static NoiseSchedule from_betas(std::vector<double> betas_in) {
        NoiseSchedule s;
        s.T = static_cast<int>(betas_in.size());
        require(s.T >= 2, "schedule needs at least 2 steps");
        s.betas = std::move(betas_in);
        s.alphas.resize(static_cast<std::size_t>(s.T));
        s.alpha_bars.resize(static_cast<std::size_t>(s.T));
        double prod = 1.0;
        double prev_beta = 0.0;
        for (int t = 0; t < s.T; ++t) {
            const double b = s.betas[static_cast<std::size_t>(t)];
            require(b > 0.0 && b < 1.0, "betas must lie in (0,1)");
            require(b + 1e-12 >= prev_beta, "betas must be nondecreasing");
            prev_beta = b;
            s.alphas[static_cast<std::size_t>(t)] = 1.0 - b;
            prod *= 1.0 - b;
            s.alpha_bars[static_cast<std::size_t>(t)] = prod;
        }
        return s;
    }
};

inline NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
    require(T >= 2, "schedule needs at least 2 steps");
    require(beta_min > 0.0, "beta_min must be positive");
    require(beta_min <= beta_max, "beta_min must not exceed beta_max");
    require(beta_max < 1.0, "beta_max must be below 1");
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        betas[static_cast<std::size_t>(t)] =
            beta_min + (beta_max - beta_min) * static_cast<double>(t) / static_cast<double>(T - 1);
    return NoiseSchedule::from_betas(std::move(betas));
}

// Default used across the lab. beta_max chosen so the terminal alpha_bar is
// below 0.05 and sampling can start from pure noise.
inline NoiseSchedule default_schedule() { return make_schedule(100, 1e-4, 0.06); }

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, columns are samples.
template <class Derived1, class Derived2>
auto forward_diffuse(const Eigen::MatrixBase<Derived1>& z0, int t,
                     const Eigen::MatrixBase<Derived2>& eps, const NoiseSchedule& sched) {
    require(t >= 0 && t < sched.T, "timestep out of range");
    require(z0.rows() == eps.rows() && z0.cols() == eps.cols(), "noise shape must match z0");
    using S = typename Derived1::Scalar;
    const double ab = sched.alpha_bars[static_cast<std::size_t>(t)];
    return (z0 * static_cast<S>(std::sqrt(ab)) + eps * static_cast<S>(std::sqrt(1.0 - ab))).eval();
}

} // namespace stereo::diffusion

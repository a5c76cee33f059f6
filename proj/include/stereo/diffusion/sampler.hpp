#pragma once

#include <functional>

#include "stereo/core/rng.hpp"
#include "stereo/diffusion/checkpoint.hpp"
#include "stereo/diffusion/schedule.hpp"

namespace stereo::diffusion {

struct SamplerConfig {
    enum class Method { ddim, ancestral };
    Method method = Method::ddim;
    int steps = 50; // ddim only; ancestral always walks the full schedule
    bool clip_x0 = true;
};

// Noise estimate injected per step; the sampler itself is guidance-agnostic.
template <class S>
using GuidanceFn =
    std::function<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>(
        const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>&, int)>;

namespace detail {
inline std::vector<int> ddim_timesteps(int T, int steps) {
    require(steps >= 1 && steps <= T, "sampler steps must lie in [1, T]");
    std::vector<int> ts(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        ts[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long>(i) * T / steps);
    return ts;
}
} // namespace detail

// Draws n images; deterministic in (seed, config, model behind guidance_fn).
// Output columns are decoded images clamped to [0,1].
template <class S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> sample(const NoiseSchedule& sched, int latent_dim,
                                                        const GuidanceFn<S>& guidance, int n,
                                                        std::uint64_t seed,
                                                        const SamplerConfig& cfg = {},
                                                        const LatentCodec& codec = {}) {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    require(n >= 0, "sample count must be nonnegative");
    Mat Z(latent_dim, n);
    if (n == 0) return Z;

    Rng rng(Rng::mix(0x5a3113e5eedull, seed));
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
        for (Eigen::Index i = 0; i < Z.rows(); ++i) Z(i, j) = static_cast<S>(rng.normal());

    auto check_finite = [&](const Mat& m, int step_index) {
        if (!m.allFinite())
            throw RuntimeFailure("non-finite latent during sampling at step index " +
                                 std::to_string(step_index));
    };

    if (cfg.method == SamplerConfig::Method::ddim) {
        const auto ts = detail::ddim_timesteps(sched.T, cfg.steps);
        for (int idx = static_cast<int>(ts.size()) - 1; idx >= 0; --idx) {
            const int t = ts[static_cast<std::size_t>(idx)];
            Mat E = guidance(Z, t);
            const double ab = sched.alpha_bars[static_cast<std::size_t>(t)];
            const double ab_prev =
                idx > 0 ? sched.alpha_bars[static_cast<std::size_t>(ts[static_cast<std::size_t>(idx - 1)])]
                        : 1.0;
            Mat x0 = (Z - static_cast<S>(std::sqrt(1.0 - ab)) * E) / static_cast<S>(std::sqrt(ab));
            if (cfg.clip_x0) {
                // Keep (x0, eps) consistent after clipping, otherwise the
                // trajectory accumulates the clipped-away component.
                x0 = x0.cwiseMax(S(0)).cwiseMin(S(1));
                E = (Z - static_cast<S>(std::sqrt(ab)) * x0) / static_cast<S>(std::sqrt(1.0 - ab));
            }
            Z = static_cast<S>(std::sqrt(ab_prev)) * x0 + static_cast<S>(std::sqrt(1.0 - ab_prev)) * E;
            check_finite(Z, idx);
        }
    } else {
        for (int t = sched.T - 1; t >= 0; --t) {
            const Mat E = guidance(Z, t);
            const double ab = sched.alpha_bars[static_cast<std::size_t>(t)];
            const double alpha = sched.alphas[static_cast<std::size_t>(t)];
            const double beta = sched.betas[static_cast<std::size_t>(t)];
            Z = (Z - static_cast<S>(beta / std::sqrt(1.0 - ab)) * E) / static_cast<S>(std::sqrt(alpha));
            if (t > 0) {
                const S sigma = static_cast<S>(std::sqrt(beta));
                for (Eigen::Index j = 0; j < Z.cols(); ++j)
                    for (Eigen::Index i = 0; i < Z.rows(); ++i)
                        Z(i, j) += sigma * static_cast<S>(rng.normal());
            }
            check_finite(Z, t);
        }
    }

    Mat images = codec.decode(Z);
    return images.cwiseMax(S(0)).cwiseMin(S(1));
}

} // namespace stereo::diffusion

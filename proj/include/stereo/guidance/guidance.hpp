#pragma once

#include <span>
#include <vector>

#include "stereo/diffusion/encoder.hpp"
#include "stereo/diffusion/predictor.hpp"
#include "stereo/diffusion/sampler.hpp"

namespace stereo::guidance {

using diffusion::TokenSeq;

// Scalar knobs for every guidance flavour. neg_strength is the negative
// guidance strength (1 disables it exactly); apg_rescale scales the parallel
// component after projection.
struct GuidanceConfig {
    double cfg_scale = 3.0;
    double neg_strength = 2.0;
    double apg_rescale = 0.5;
    enum class EraseSet { full, adversarial_only };
    EraseSet erase_set = EraseSet::full;

    void validate() const {
        require(std::isfinite(cfg_scale) && cfg_scale >= 0.0, "cfg_scale must be >= 0");
        require(std::isfinite(neg_strength) && neg_strength >= 1.0, "neg_strength must be >= 1");
        require(std::isfinite(apg_rescale) && apg_rescale >= 0.0 && apg_rescale <= 1.0,
                "apg_rescale must lie in [0,1]");
    }
};

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
struct APGComponents {
    Mat<S> parallel;
    Mat<S> orthogonal;
};

// Column-wise projection of delta onto basis. Inner products accumulate in
// double regardless of the storage scalar. Near-zero basis columns project to
// zero (the whole delta is then orthogonal).
template <class S>
APGComponents<S> apg_decompose(const Mat<S>& delta, const Mat<S>& basis) {
    require(delta.rows() == basis.rows() && delta.cols() == basis.cols(),
            "delta and basis shapes must match");
    APGComponents<S> out;
    out.parallel.resize(delta.rows(), delta.cols());
    out.orthogonal.resize(delta.rows(), delta.cols());
    for (Eigen::Index j = 0; j < delta.cols(); ++j) {
        double dot = 0, nn = 0;
        for (Eigen::Index i = 0; i < delta.rows(); ++i) {
            dot += static_cast<double>(delta(i, j)) * static_cast<double>(basis(i, j));
            nn += static_cast<double>(basis(i, j)) * static_cast<double>(basis(i, j));
        }
        if (std::sqrt(nn) < 1e-8) {
            out.parallel.col(j).setZero();
            out.orthogonal.col(j) = delta.col(j);
        } else {
            out.parallel.col(j) = basis.col(j) * static_cast<S>(dot / nn);
            out.orthogonal.col(j) = delta.col(j) - out.parallel.col(j);
        }
    }
    return out;
}

// Conditional estimate for one prompt shared across the batch.
template <class S>
Mat<S> cond_estimate(const diffusion::Predictor<S>& pred, const diffusion::PromptEncoder<S>& enc,
                     const Mat<S>& z, int t, const TokenSeq& prompt) {
    Mat<S> C(enc.embed_dim(), z.cols());
    const auto e = enc.encode(prompt);
    for (Eigen::Index j = 0; j < z.cols(); ++j) C.col(j) = e;
    return pred.forward(z, t, C);
}

template <class S>
Mat<S> uncond_estimate(const diffusion::Predictor<S>& pred, const diffusion::PromptEncoder<S>& enc,
                       const Mat<S>& z, int t, int null_id) {
    return cond_estimate(pred, enc, z, t, TokenSeq{null_id});
}

// Conditional minus unconditional estimate at (z, t).
template <class S>
Mat<S> cfg_delta(const diffusion::Predictor<S>& pred, const diffusion::PromptEncoder<S>& enc,
                 const Mat<S>& z, int t, const TokenSeq& prompt, int null_id) {
    return cond_estimate(pred, enc, z, t, prompt) - uncond_estimate(pred, enc, z, t, null_id);
}

// eps_u + alpha (eps_c - eps_u).
template <class S>
Mat<S> cfg_estimate(const diffusion::Predictor<S>& pred, const diffusion::PromptEncoder<S>& enc,
                    const Mat<S>& z, int t, const TokenSeq& prompt, int null_id, double alpha) {
    require(std::isfinite(alpha) && alpha >= 0.0, "cfg scale must be >= 0");
    const Mat<S> eu = uncond_estimate(pred, enc, z, t, null_id);
    const Mat<S> ec = cond_estimate(pred, enc, z, t, prompt);
    return eu + static_cast<S>(alpha) * (ec - eu);
}

// Projected negative-guidance term (eta-1)(delta_orth + rescale * delta_par)
// for one prompt, with the prompt's own conditional estimate as the basis.
template <class S>
Mat<S> projected_negative_term(const diffusion::Predictor<S>& pred,
                               const diffusion::PromptEncoder<S>& enc, const Mat<S>& z, int t,
                               const TokenSeq& prompt, const Mat<S>& eps_u,
                               const GuidanceConfig& cfg) {
    const Mat<S> ec = cond_estimate(pred, enc, z, t, prompt);
    const Mat<S> delta = ec - eps_u;
    const auto comp = apg_decompose<S>(delta, ec);
    return static_cast<S>(cfg.neg_strength - 1.0) *
           (comp.orthogonal + static_cast<S>(cfg.apg_rescale) * comp.parallel);
}

// Steer-away target: eps_c - (eta-1)(delta_orth + rescale * delta_par).
template <class S>
Mat<S> negative_guidance_target(const diffusion::Predictor<S>& frozen,
                                const diffusion::PromptEncoder<S>& enc, const Mat<S>& z, int t,
                                const TokenSeq& prompt, int null_id, const GuidanceConfig& cfg) {
    cfg.validate();
    const Mat<S> eu = uncond_estimate(frozen, enc, z, t, null_id);
    const Mat<S> ec = cond_estimate(frozen, enc, z, t, prompt);
    const auto comp = apg_decompose<S>(Mat<S>(ec - eu), ec);
    return ec - static_cast<S>(cfg.neg_strength - 1.0) *
                    (comp.orthogonal + static_cast<S>(cfg.apg_rescale) * comp.parallel);
}

// eps_u + sum_j eta_j (eps_cj - eps_u). Weights may be negative.
template <class S>
Mat<S> compositional_estimate(const diffusion::Predictor<S>& pred,
                              const diffusion::PromptEncoder<S>& enc, const Mat<S>& z, int t,
                              std::span<const std::pair<TokenSeq, double>> weighted_prompts,
                              int null_id) {
    Mat<S> out = uncond_estimate(pred, enc, z, t, null_id);
    const Mat<S> eu = out;
    for (const auto& [prompt, weight] : weighted_prompts) {
        require(std::isfinite(weight), "compositional weight must be finite");
        out += static_cast<S>(weight) * (cond_estimate(pred, enc, z, t, prompt) - eu);
    }
    return out;
}

// Anchor-positive, erase-negative composed target, evaluated on the frozen
// original model. The erase term averages the projected negative terms over
// the prompt set; with EraseSet::full the natural prompt (entry 0)
// participates, with adversarial_only it does not.
template <class S>
Mat<S> reo_composed_target(const diffusion::Predictor<S>& frozen,
                           const diffusion::PromptEncoder<S>& enc, const Mat<S>& z, int t,
                           const TokenSeq& anchor, std::span<const TokenSeq> erase_prompts,
                           int null_id, const GuidanceConfig& cfg) {
    cfg.validate();
    require(!erase_prompts.empty(), "erase prompt set must be non-empty");
    const std::size_t begin = cfg.erase_set == GuidanceConfig::EraseSet::adversarial_only ? 1 : 0;
    require(begin < erase_prompts.size(), "erase prompt set has no usable entries");

    const Mat<S> eu = uncond_estimate(frozen, enc, z, t, null_id);
    const Mat<S> eps_anchor = projected_negative_term(frozen, enc, z, t, anchor, eu, cfg);
    Mat<S> eps_erase = Mat<S>::Zero(z.rows(), z.cols());
    for (std::size_t i = begin; i < erase_prompts.size(); ++i)
        eps_erase += projected_negative_term(frozen, enc, z, t, erase_prompts[i], eu, cfg);
    eps_erase /= static_cast<S>(erase_prompts.size() - begin);
    return eu + (eps_anchor - eps_erase);
}

// Sampler guidance closures ---------------------------------------------------

template <class S>
diffusion::GuidanceFn<S> make_cfg_guidance(const diffusion::Predictor<S>& pred,
                                           const diffusion::PromptEncoder<S>& enc, TokenSeq prompt,
                                           int null_id, double alpha) {
    return [&pred, &enc, prompt = std::move(prompt), null_id, alpha](const Mat<S>& z, int t) {
        return cfg_estimate(pred, enc, z, t, prompt, null_id, alpha);
    };
}

template <class S>
diffusion::GuidanceFn<S> make_conditional_guidance(const diffusion::Predictor<S>& pred,
                                                   const diffusion::PromptEncoder<S>& enc,
                                                   TokenSeq prompt) {
    return [&pred, &enc, prompt = std::move(prompt)](const Mat<S>& z, int t) {
        return cond_estimate(pred, enc, z, t, prompt);
    };
}

} // namespace stereo::guidance

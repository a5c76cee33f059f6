#pragma once

#include <Eigen/Core>
#include <cmath>

#include "stereo/core/rng.hpp"
#include "stereo/world/world.hpp"

namespace stereo::world {

using Image = Eigen::VectorXf; // kPixels intensities in [0,1], row-major pixels

struct Nuisance {
    double cx = 0, cy = 0; // shape centre
    double radius = 0;     // shape scale actually drawn
    std::uint64_t seed = 0;
};

struct RenderedSample {
    Image image;
    PromptSpec label;
    Nuisance nuisance;
};

namespace detail {

// Signed coverage in [0,1] of pixel (x,y) for each geometry, ~1px soft edge.
inline double shape_coverage(ShapeGeometry g, double x, double y, double cx, double cy, double r) {
    const double dx = x - cx, dy = y - cy;
    double sd = 0; // positive inside
    switch (g) {
        case ShapeGeometry::circle:
            sd = r - std::sqrt(dx * dx + dy * dy);
            break;
        case ShapeGeometry::square: {
            // Outlined square: a stroke band, not a filled block. Keeps it
            // unambiguous against the filled disk at this resolution.
            const double h = r * 0.92, stroke = std::max(1.4, 0.32 * h);
            const double box = std::min(h - std::abs(dx), h - std::abs(dy));
            sd = std::min(box, stroke - box);
            break;
        }
        case ShapeGeometry::cross: {
            const double arm = r * 1.05, w = r * 0.34;
            const double bar_h = std::min({w - std::abs(dy), arm - std::abs(dx)});
            const double bar_v = std::min({w - std::abs(dx), arm - std::abs(dy)});
            sd = std::max(bar_h, bar_v);
            break;
        }
        case ShapeGeometry::triangle: {
            // Isosceles, apex up: base half-width r at the bottom edge.
            const double top = cy - r, bottom = cy + r * 0.85;
            const double frac = (y - top) / (bottom - top);
            if (frac < 0 || frac > 1) {
                sd = -1.0;
            } else {
                const double half = r * frac;
                sd = std::min({half - std::abs(dx), y - top, bottom - y});
            }
            break;
        }
    }
    return std::clamp(sd + 0.5, 0.0, 1.0);
}

inline double background_value(BackgroundTexture t, const RenderParams& rp, int x, int y) {
    switch (t) {
        case BackgroundTexture::plain:
            return 0.5 * (rp.level_lo + rp.level_hi);
        case BackgroundTexture::stripes:
            return ((y / (rp.period / 2)) % 2 == 0) ? rp.level_lo : rp.level_hi;
        case BackgroundTexture::checker:
            return (((x / rp.period) + (y / rp.period)) % 2 == 0) ? rp.level_lo : rp.level_hi;
    }
    return 0.0;
}

} // namespace detail

struct RenderSettings {
    double blank_level = 0.05;
    double position_jitter = 3.0; // pixels, each axis
    double size_jitter = 0.20;    // relative
    double noise_sigma = 0.02;
};

// Deterministic in (spec, seed): same bytes on every call.
inline RenderedSample render(const World& w, const PromptSpec& spec, std::uint64_t seed,
                             const RenderSettings& s = {}) {
    const int n = World::kImageSize;
    Rng rng(Rng::mix(0x7265e6de72ull, seed));

    const ConceptToken* shape = nullptr;
    const ConceptToken* bg = nullptr;
    for (int id : spec.tokens()) {
        const auto& t = w.token(id);
        if (t.kind == TokenKind::shape) shape = &t;
        if (t.kind == TokenKind::background) bg = &t;
    }

    Image img(World::kPixels);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double v = bg ? detail::background_value(bg->render_params.texture, bg->render_params, x, y)
                                : s.blank_level;
            img[y * n + x] = static_cast<float>(v);
        }

    Nuisance nu;
    nu.seed = seed;
    if (shape) {
        const auto& rp = shape->render_params;
        nu.cx = (n - 1) / 2.0 + rng.uniform(-s.position_jitter, s.position_jitter);
        nu.cy = (n - 1) / 2.0 + rng.uniform(-s.position_jitter, s.position_jitter);
        nu.radius = rp.base_radius * (1.0 + rng.uniform(-s.size_jitter, s.size_jitter));
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double cov = detail::shape_coverage(rp.shape, x, y, nu.cx, nu.cy, nu.radius);
                if (cov > 0) {
                    float& px = img[y * n + x];
                    px = static_cast<float>(px * (1.0 - cov) + rp.intensity * cov);
                }
            }
    }

    for (int i = 0; i < World::kPixels; ++i) {
        const double v = img[i] + rng.normal(0.0, s.noise_sigma);
        img[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }

    return RenderedSample{std::move(img), spec, nu};
}

} // namespace stereo::world

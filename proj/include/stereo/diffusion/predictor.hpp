#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "stereo/core/errors.hpp"
#include "stereo/core/hash.hpp"
#include "stereo/core/rng.hpp"

namespace stereo::diffusion {

struct Architecture {
    int latent_dim = 256;
    int time_dim = 32;
    int embed_dim = 16;
    int width = 256;

    bool operator==(const Architecture&) const = default;
};

// MLP noise predictor. Input is latent (+) sinusoidal time embedding (+)
// prompt embedding through separate first-layer blocks, then two more hidden
// layers and a linear head. The noise estimate carries a schedule-coupled skip,
//   eps(z,t,c) = sqrt(1-ab_t) z + sqrt(ab_t) mlp(z,t,c),
// so the near-identity behaviour at high noise levels does not have to be
// learned through the hidden layers. Parameter groups:
//   conditioning: the prompt-embedding input block
//   trunk:        everything else up to the last hidden activation
//   head:         the output layer
template <class S>
class Predictor {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    struct ParamRef {
        const char* group;
        const char* name;
        Mat* m;
    };
    struct ConstParamRef {
        const char* group;
        const char* name;
        const Mat* m;
    };

    Architecture arch;
    Mat w1z, w1t, w1c, b1;
    Mat w2, u2, v2, b2;
    Mat w3, u3, v3, b3;
    Mat w4, b4;
    std::vector<double> alpha_bars; // skip coefficients, from the owning schedule

    void bind_schedule(const std::vector<double>& ab) { alpha_bars = ab; }

    static Predictor init(const Architecture& a, Rng& rng) {
        Predictor p;
        p.arch = a;
        const int fan_in = a.latent_dim + a.time_dim + a.embed_dim;
        p.w1z = random(a.width, a.latent_dim, std::sqrt(2.0 / fan_in), rng);
        p.w1t = random(a.width, a.time_dim, std::sqrt(2.0 / fan_in), rng);
        p.w1c = random(a.width, a.embed_dim, std::sqrt(2.0 / fan_in), rng);
        p.b1 = Mat::Zero(a.width, 1);
        p.w2 = random(a.width, a.width, std::sqrt(2.0 / a.width), rng);
        p.u2 = random(a.width, a.time_dim, std::sqrt(1.0 / a.time_dim), rng);
        p.v2 = random(a.width, a.embed_dim, std::sqrt(1.0 / a.embed_dim), rng);
        p.b2 = Mat::Zero(a.width, 1);
        p.w3 = random(a.width, a.width, std::sqrt(2.0 / a.width), rng);
        p.u3 = random(a.width, a.time_dim, std::sqrt(1.0 / a.time_dim), rng);
        p.v3 = random(a.width, a.embed_dim, std::sqrt(1.0 / a.embed_dim), rng);
        p.b3 = Mat::Zero(a.width, 1);
        p.w4 = random(a.latent_dim, a.width, std::sqrt(1.0 / a.width), rng);
        p.b4 = Mat::Zero(a.latent_dim, 1);
        return p;
    }

    static Predictor zeros_like(const Predictor& o) {
        Predictor p;
        p.arch = o.arch;
        p.alpha_bars = o.alpha_bars;
        auto refs_o = o.params();
        p.w1z = Mat::Zero(o.w1z.rows(), o.w1z.cols());
        p.w1t = Mat::Zero(o.w1t.rows(), o.w1t.cols());
        p.w1c = Mat::Zero(o.w1c.rows(), o.w1c.cols());
        p.b1 = Mat::Zero(o.b1.rows(), 1);
        p.w2 = Mat::Zero(o.w2.rows(), o.w2.cols());
        p.u2 = Mat::Zero(o.u2.rows(), o.u2.cols());
        p.v2 = Mat::Zero(o.v2.rows(), o.v2.cols());
        p.b2 = Mat::Zero(o.b2.rows(), 1);
        p.w3 = Mat::Zero(o.w3.rows(), o.w3.cols());
        p.u3 = Mat::Zero(o.u3.rows(), o.u3.cols());
        p.v3 = Mat::Zero(o.v3.rows(), o.v3.cols());
        p.b3 = Mat::Zero(o.b3.rows(), 1);
        p.w4 = Mat::Zero(o.w4.rows(), o.w4.cols());
        p.b4 = Mat::Zero(o.b4.rows(), 1);
        (void)refs_o;
        return p;
    }

    std::vector<ParamRef> params() {
        return {{"trunk", "w1z", &w1z}, {"trunk", "w1t", &w1t}, {"conditioning", "w1c", &w1c},
                {"trunk", "b1", &b1},   {"trunk", "w2", &w2},   {"trunk", "u2", &u2},
                {"conditioning", "v2", &v2}, {"trunk", "b2", &b2}, {"trunk", "w3", &w3},
                {"trunk", "u3", &u3},   {"conditioning", "v3", &v3}, {"trunk", "b3", &b3},
                {"head", "w4", &w4},    {"head", "b4", &b4}};
    }
    std::vector<ConstParamRef> params() const {
        return {{"trunk", "w1z", &w1z}, {"trunk", "w1t", &w1t}, {"conditioning", "w1c", &w1c},
                {"trunk", "b1", &b1},   {"trunk", "w2", &w2},   {"trunk", "u2", &u2},
                {"conditioning", "v2", &v2}, {"trunk", "b2", &b2}, {"trunk", "w3", &w3},
                {"trunk", "u3", &u3},   {"conditioning", "v3", &v3}, {"trunk", "b3", &b3},
                {"head", "w4", &w4},    {"head", "b4", &b4}};
    }

    static const std::array<const char*, 3>& group_names() {
        static const std::array<const char*, 3> names = {"trunk", "conditioning", "head"};
        return names;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& r : params()) n += static_cast<std::size_t>(r.m->size());
        return n;
    }

    std::uint64_t hash() const {
        Hasher h;
        for (const auto& r : params()) {
            h.update(r.name);
            h.update_array(r.m->data(), static_cast<std::size_t>(r.m->size()));
        }
        return h.digest();
    }

    std::uint64_t group_hash(const std::string& group) const {
        Hasher h;
        for (const auto& r : params())
            if (group == r.group) {
                h.update(r.name);
                h.update_array(r.m->data(), static_cast<std::size_t>(r.m->size()));
            }
        return h.digest();
    }

    // Sinusoidal time features, frequencies log-spaced from 1 down to 1e-4.
    Mat time_embedding(std::span<const int> ts) const {
        const int half = arch.time_dim / 2;
        Mat te(arch.time_dim, static_cast<Eigen::Index>(ts.size()));
        for (Eigen::Index j = 0; j < te.cols(); ++j) {
            const double t = static_cast<double>(ts[static_cast<std::size_t>(j)]);
            for (int k = 0; k < half; ++k) {
                const double w = std::exp(-std::log(10000.0) * k / (half - 1));
                te(2 * k, j) = static_cast<S>(std::sin(t * w));
                te(2 * k + 1, j) = static_cast<S>(std::cos(t * w));
            }
        }
        return te;
    }

    struct Cache {
        Mat Z, TE, C;
        Mat A1, H1, A2, H2, A3, H3;
        std::vector<S> skip_gain; // sqrt(ab_t) per column, scales the mlp branch
    };

    // Z: latent_dim x B, C: embed_dim x B, one timestep per column.
    Mat forward(const Mat& Z, std::span<const int> ts, const Mat& C, Cache* cache = nullptr) const {
        require(Z.rows() == arch.latent_dim, "latent dimension mismatch");
        require(C.rows() == arch.embed_dim, "embedding dimension mismatch");
        require(Z.cols() == C.cols() && Z.cols() == static_cast<Eigen::Index>(ts.size()),
                "batch size mismatch");
        require(!alpha_bars.empty(), "predictor is not bound to a schedule");
        Mat TE = time_embedding(ts);
        Mat A1 = w1z * Z + w1t * TE + w1c * C;
        A1.colwise() += b1.col(0);
        Mat H1 = silu(A1);
        Mat A2 = w2 * H1 + u2 * TE + v2 * C;
        A2.colwise() += b2.col(0);
        Mat H2 = silu(A2);
        Mat A3 = w3 * H2 + u3 * TE + v3 * C;
        A3.colwise() += b3.col(0);
        Mat H3 = silu(A3);
        Mat E = w4 * H3;
        E.colwise() += b4.col(0);
        std::vector<S> gain(static_cast<std::size_t>(Z.cols()));
        for (Eigen::Index j = 0; j < Z.cols(); ++j) {
            const double ab = alpha_bars.at(static_cast<std::size_t>(ts[static_cast<std::size_t>(j)]));
            const S g = static_cast<S>(std::sqrt(ab));
            gain[static_cast<std::size_t>(j)] = g;
            E.col(j) = static_cast<S>(std::sqrt(1.0 - ab)) * Z.col(j) + g * E.col(j);
        }
        if (cache) {
            cache->Z = Z;
            cache->TE = std::move(TE);
            cache->C = C;
            cache->A1 = std::move(A1);
            cache->H1 = std::move(H1);
            cache->A2 = std::move(A2);
            cache->H2 = std::move(H2);
            cache->A3 = std::move(A3);
            cache->H3 = std::move(H3);
            cache->skip_gain = std::move(gain);
        }
        return E;
    }

    Mat forward(const Mat& Z, int t, const Mat& C, Cache* cache = nullptr) const {
        std::vector<int> ts(static_cast<std::size_t>(Z.cols()), t);
        return forward(Z, std::span<const int>(ts), C, cache);
    }

    // Gradients of a scalar loss given dL/dE; optionally also dL/dC.
    Predictor backward(const Cache& c, const Mat& dE_in, Mat* dC = nullptr) const {
        Mat dE = dE_in;
        for (Eigen::Index j = 0; j < dE.cols(); ++j)
            dE.col(j) *= c.skip_gain[static_cast<std::size_t>(j)];
        Predictor g = zeros_like(*this);
        g.w4 = dE * c.H3.transpose();
        g.b4 = dE.rowwise().sum();
        Mat dH3 = w4.transpose() * dE;
        Mat dA3 = dH3.array() * silu_grad(c.A3).array();
        g.w3 = dA3 * c.H2.transpose();
        g.u3 = dA3 * c.TE.transpose();
        g.v3 = dA3 * c.C.transpose();
        g.b3 = dA3.rowwise().sum();
        Mat dH2 = w3.transpose() * dA3;
        Mat dA2 = dH2.array() * silu_grad(c.A2).array();
        g.w2 = dA2 * c.H1.transpose();
        g.u2 = dA2 * c.TE.transpose();
        g.v2 = dA2 * c.C.transpose();
        g.b2 = dA2.rowwise().sum();
        Mat dH1 = w2.transpose() * dA2;
        Mat dA1 = dH1.array() * silu_grad(c.A1).array();
        g.w1z = dA1 * c.Z.transpose();
        g.w1t = dA1 * c.TE.transpose();
        g.w1c = dA1 * c.C.transpose();
        g.b1 = dA1.rowwise().sum();
        if (dC) *dC = w1c.transpose() * dA1 + v2.transpose() * dA2 + v3.transpose() * dA3;
        return g;
    }

    template <class T>
    Predictor<T> cast() const {
        Predictor<T> out;
        out.arch = arch;
        out.alpha_bars = alpha_bars;
        out.w1z = w1z.template cast<T>();
        out.w1t = w1t.template cast<T>();
        out.w1c = w1c.template cast<T>();
        out.b1 = b1.template cast<T>();
        out.w2 = w2.template cast<T>();
        out.u2 = u2.template cast<T>();
        out.v2 = v2.template cast<T>();
        out.b2 = b2.template cast<T>();
        out.w3 = w3.template cast<T>();
        out.u3 = u3.template cast<T>();
        out.v3 = v3.template cast<T>();
        out.b3 = b3.template cast<T>();
        out.w4 = w4.template cast<T>();
        out.b4 = b4.template cast<T>();
        return out;
    }

private:
    static Mat random(int rows, int cols, double stddev, Rng& rng) {
        Mat m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) m(i, j) = static_cast<S>(rng.normal(0.0, stddev));
        return m;
    }

    static Mat silu(const Mat& x) {
        return (x.array() / (1 + (-x.array()).exp())).matrix();
    }

    static Mat silu_grad(const Mat& x) {
        auto sig = 1 / (1 + (-x.array()).exp());
        return (sig * (1 + x.array() * (1 - sig))).matrix();
    }
};

// Named parameter-group mask. Empty set means "update nothing".
using GroupMask = std::set<std::string>;

inline GroupMask default_erase_mask() { return {"trunk", "head"}; }

} // namespace stereo::diffusion

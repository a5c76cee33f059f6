#pragma once

#include <Eigen/Core>
#include <cmath>
#include <array>
#include <map>

#include "stereo/world/dataset.hpp"
#include "stereo/world/render.hpp"

namespace stereo::world {

// Image-side oracle: per-concept presence probabilities from template
// correlation, with logistic calibration fitted on renderer-labelled data.
//
// Shapes are scored by the best cosine match between a thresholded foreground
// map and an analytic template bank (position/scale grid, sharp and blurred
// variants). Backgrounds are scored by masked agreement with the fixed
// background patterns on non-foreground pixels.
class ConceptOracle {
public:
    struct Calibration {
        double mid = 0.5;  // logistic centre on the raw score axis
        double gain = 12;  // logistic steepness
        double threshold = 0.5;
    };

    static constexpr double kForegroundLo = 0.55;
    static constexpr double kForegroundHi = 0.80;
    static constexpr double kBackgroundMask = 0.50;
    static constexpr double kBgSigma = 0.12;

    // Raw presence score. Shapes: best-bank NCC plus twice the margin over the
    // rival shapes (argmax on the banks is reliable; absolute NCC alone is not
    // comparable across images). Backgrounds: masked pattern agreement.
    double score(const Image& img, int concept_id) const {
        const auto& tok = world_.token(concept_id);
        if (tok.kind == TokenKind::shape) {
            double own = 0, rival = 0;
            for (int sid : world_.shape_ids()) {
                const double s = shape_ncc(img, sid);
                if (sid == concept_id)
                    own = s;
                else
                    rival = std::max(rival, s);
            }
            return own + 2.0 * (own - rival);
        }
        if (tok.kind == TokenKind::background) return background_score(img, concept_id);
        return 0.0;
    }

    double probability(const Image& img, int concept_id) const {
        const auto& c = calib_.at(concept_id);
        return 1.0 / (1.0 + std::exp(-c.gain * (score(img, concept_id) - c.mid)));
    }

    // O_X: presence decision.
    int operator()(const Image& img, int concept_id) const {
        const auto& c = calib_.at(concept_id);
        return probability(img, concept_id) >= c.threshold ? 1 : 0;
    }

    std::vector<int> detected(const Image& img) const {
        std::vector<int> out;
        for (int c : world_.concept_ids())
            if ((*this)(img, c)) out.push_back(c);
        return out;
    }

    // Best-scoring shape, or -1 when no shape clears its threshold.
    int shape_argmax(const Image& img) const {
        int best = -1;
        double best_p = 0;
        for (int s : world_.shape_ids()) {
            const double p = probability(img, s);
            if ((*this)(img, s) && p > best_p) {
                best = s;
                best_p = p;
            }
        }
        return best;
    }

    double validation_accuracy() const { return validation_accuracy_; }
    const World& world() const { return world_; }
    const Calibration& calibration(int concept_id) const { return calib_.at(concept_id); }

    // Fraction of samples whose detected concept set equals the label tokens.
    double exact_match_rate(const Eigen::MatrixXf& images, const std::vector<PromptSpec>& labels) const {
        int hits = 0;
        for (int i = 0; i < images.cols(); ++i) {
            std::vector<int> expect;
            for (int id : labels[static_cast<std::size_t>(i)].tokens())
                if (world_.token(id).kind != TokenKind::null_token) expect.push_back(id);
            std::sort(expect.begin(), expect.end());
            if (detected(images.col(i)) == expect) ++hits;
        }
        return images.cols() ? static_cast<double>(hits) / images.cols() : 0.0;
    }

    friend ConceptOracle fit_oracle(const World& w, const Dataset& ds, double required_accuracy);

private:
    explicit ConceptOracle(const World& w) : world_(w) { build_banks(); }

    void build_banks() {
        const int n = World::kImageSize;
        for (int sid : world_.shape_ids()) {
            const auto& rp = world_.token(sid).render_params;
            std::vector<Eigen::VectorXf> fill_bank, edge_bank;
            for (double scale : {0.8, 0.9, 1.0, 1.1, 1.2})
                for (int dy = -3; dy <= 3; ++dy)
                    for (int dx = -3; dx <= 3; ++dx) {
                        Eigen::VectorXf t(World::kPixels);
                        const double cx = (n - 1) / 2.0 + dx, cy = (n - 1) / 2.0 + dy;
                        for (int y = 0; y < n; ++y)
                            for (int x = 0; x < n; ++x)
                                t[y * n + x] = static_cast<float>(
                                    detail::shape_coverage(rp.shape, x, y, cx, cy, rp.base_radius * scale));
                        const Eigen::VectorXf tb = blur3(t);
                        fill_bank.push_back(normalized(t));
                        edge_bank.push_back(normalized(blur3(edge_map(t))));
                        fill_bank.push_back(normalized(tb));
                        edge_bank.push_back(normalized(blur3(edge_map(tb))));
                    }
            Eigen::MatrixXf mf(World::kPixels, static_cast<int>(fill_bank.size()));
            Eigen::MatrixXf me(World::kPixels, static_cast<int>(edge_bank.size()));
            for (int j = 0; j < mf.cols(); ++j) {
                mf.col(j) = fill_bank[static_cast<std::size_t>(j)];
                me.col(j) = edge_bank[static_cast<std::size_t>(j)];
            }
            shape_banks_[sid] = std::move(mf);
            edge_banks_[sid] = std::move(me);
        }
        for (int bid : world_.background_ids()) {
            const auto& rp = world_.token(bid).render_params;
            Eigen::VectorXf t(World::kPixels);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    t[y * n + x] = static_cast<float>(detail::background_value(rp.texture, rp, x, y));
            bg_patterns_[bid] = std::move(t);
        }
    }

    // Joint fill+edge NCC, maximised over one aligned (position, scale, blur)
    // bank. Zero-mean NCC on the fill removes the shared "filled blob"
    // component; the edge term carries the boundary geometry that separates
    // near-round shapes.
    double shape_ncc(const Image& img, int sid) const {
        Eigen::VectorXf fg(World::kPixels);
        for (int i = 0; i < World::kPixels; ++i)
            fg[i] = static_cast<float>(
                std::clamp((img[i] - kForegroundLo) / (kForegroundHi - kForegroundLo), 0.0, 1.0));
        if (fg.norm() < 1e-6) return 0.0;
        Eigen::VectorXf ed = blur3(edge_map(fg));
        Eigen::VectorXf fgz = fg;
        fgz.array() -= fgz.mean();
        ed.array() -= ed.mean();
        const double fn = fgz.norm(), en = ed.norm();
        if (fn < 1e-6) return 0.0;
        Eigen::VectorXf s = (shape_banks_.at(sid).transpose() * fgz) / fn;
        if (en > 1e-6) s += (edge_banks_.at(sid).transpose() * ed) / en;
        return 0.5 * s.maxCoeff();
    }

    double background_score(const Image& img, int bid) const {
        const auto& pattern = bg_patterns_.at(bid);
        // Exclude the foreground and a one-pixel halo around it; antialiased
        // shape edges otherwise leak into the background statistic.
        const int n = World::kImageSize;
        std::array<bool, World::kPixels> fgmask{};
        for (int i = 0; i < World::kPixels; ++i) fgmask[static_cast<std::size_t>(i)] = img[i] >= kBackgroundMask;
        double sq = 0;
        int count = 0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                bool near_fg = false;
                for (int dy = -1; dy <= 1 && !near_fg; ++dy)
                    for (int dx = -1; dx <= 1 && !near_fg; ++dx) {
                        const int xx = std::clamp(x + dx, 0, n - 1), yy = std::clamp(y + dy, 0, n - 1);
                        near_fg = fgmask[static_cast<std::size_t>(yy * n + xx)];
                    }
                if (near_fg) continue;
                const double d = img[y * n + x] - pattern[y * n + x];
                sq += d * d;
                ++count;
            }
        if (count < World::kPixels / 4) return 0.0; // foreground swamped the canvas
        const double rmse = std::sqrt(sq / count);
        return std::exp(-(rmse / kBgSigma) * (rmse / kBgSigma));
    }

    static Eigen::VectorXf normalized(Eigen::VectorXf v) {
        v.array() -= v.mean();
        const float n = v.norm();
        return n > 0 ? Eigen::VectorXf(v / n) : v;
    }

    // Gradient magnitude by central differences, clamped at the canvas edge.
    static Eigen::VectorXf edge_map(const Eigen::VectorXf& v) {
        const int n = World::kImageSize;
        Eigen::VectorXf out(World::kPixels);
        auto at = [&](int x, int y) -> float {
            x = std::clamp(x, 0, n - 1);
            y = std::clamp(y, 0, n - 1);
            return v[y * n + x];
        };
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const float gx = 0.5f * (at(x + 1, y) - at(x - 1, y));
                const float gy = 0.5f * (at(x, y + 1) - at(x, y - 1));
                out[y * n + x] = std::sqrt(gx * gx + gy * gy);
            }
        return out;
    }

    static Eigen::VectorXf blur3(const Eigen::VectorXf& v) {
        const int n = World::kImageSize;
        Eigen::VectorXf out(World::kPixels);
        auto at = [&](int x, int y) -> float {
            x = std::clamp(x, 0, n - 1);
            y = std::clamp(y, 0, n - 1);
            return v[y * n + x];
        };
        static const float k[3] = {0.25f, 0.5f, 0.25f};
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                float acc = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) acc += k[dx + 1] * k[dy + 1] * at(x + dx, y + dy);
                out[y * n + x] = acc;
            }
        return out;
    }

    World world_;
    std::map<int, Eigen::MatrixXf> shape_banks_;
    std::map<int, Eigen::MatrixXf> edge_banks_;
    std::map<int, Eigen::VectorXf> bg_patterns_;
    std::map<int, Calibration> calib_;
    double validation_accuracy_ = 0;
};

// Calibrates per-concept probabilities on an 80/20 split of `ds` and requires
// exact-set accuracy of at least `required_accuracy` on the held-out part.
// The oracle is the measurement instrument: failing the bar is a hard error.
inline ConceptOracle fit_oracle(const World& w, const Dataset& ds, double required_accuracy = 0.99) {
    require(ds.size() >= 50, "oracle fitting needs a reasonably sized dataset");
    {
        std::vector<bool> seen(static_cast<std::size_t>(w.vocab_size()), false);
        for (const auto& l : ds.labels)
            for (int id : l.tokens()) seen[static_cast<std::size_t>(id)] = true;
        for (int s : w.shape_ids())
            require(seen[static_cast<std::size_t>(s)], "dataset must cover every shape concept");
    }

    ConceptOracle oracle(w);

    std::vector<int> train_idx, val_idx;
    for (int i = 0; i < ds.size(); ++i)
        (i % 5 == 4 ? val_idx : train_idx).push_back(i);

    for (int cid : w.concept_ids()) {
        std::vector<double> pos, neg;
        for (int i : train_idx) {
            const double s = oracle.score(ds.images.col(i), cid);
            if (ds.labels[static_cast<std::size_t>(i)].contains(cid))
                pos.push_back(s);
            else
                neg.push_back(s);
        }
        require(!pos.empty() && !neg.empty(), "concept lacks positives or negatives in dataset");
        std::sort(pos.begin(), pos.end());
        std::sort(neg.begin(), neg.end());
        const double pos_lo = pos[static_cast<std::size_t>(0.01 * (pos.size() - 1))];
        const double neg_hi = neg[static_cast<std::size_t>(0.99 * (neg.size() - 1))];
        ConceptOracle::Calibration c;
        c.mid = 0.5 * (pos_lo + neg_hi);
        c.gain = 6.0 / std::max(pos_lo - neg_hi, 0.02);
        c.threshold = 0.5;
        oracle.calib_[cid] = c;
    }

    int hits = 0;
    for (int i : val_idx) {
        std::vector<int> expect;
        for (int id : ds.labels[static_cast<std::size_t>(i)].tokens())
            if (w.token(id).kind != TokenKind::null_token) expect.push_back(id);
        std::sort(expect.begin(), expect.end());
        if (oracle.detected(ds.images.col(i)) == expect) ++hits;
    }
    oracle.validation_accuracy_ = val_idx.empty() ? 0.0 : static_cast<double>(hits) / val_idx.size();
    if (oracle.validation_accuracy_ < required_accuracy)
        throw RuntimeFailure("oracle validation accuracy " + std::to_string(oracle.validation_accuracy_) +
                             " below required " + std::to_string(required_accuracy));
    return oracle;
}

} // namespace stereo::world

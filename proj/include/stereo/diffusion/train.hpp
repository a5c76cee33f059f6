#pragma once

#include <vector>

#include "stereo/core/kv.hpp"
#include "stereo/diffusion/checkpoint.hpp"
#include "stereo/diffusion/optimizer.hpp"
#include "stereo/world/dataset.hpp"

namespace stereo::diffusion {

struct BaseTrainConfig {
    Architecture arch;
    int schedule_T = 100;
    double beta_min = 1e-4;
    double beta_max = 0.06;
    int steps = 12000;
    int batch = 64;
    double lr = 1e-3;
    double lr_final = 5e-5; // cosine-decayed to this by the last step
    double cond_dropout = 0.1;
    std::uint64_t seed = 0;
    int log_every = 100;

    std::string hash_hex() const {
        KvDoc d;
        d.set("arch.latent_dim", arch.latent_dim);
        d.set("arch.time_dim", arch.time_dim);
        d.set("arch.embed_dim", arch.embed_dim);
        d.set("arch.width", arch.width);
        d.set("schedule.T", schedule_T);
        d.set("schedule.beta_min", beta_min);
        d.set("schedule.beta_max", beta_max);
        d.set("train.steps", steps);
        d.set("train.batch", batch);
        d.set("train.lr", lr);
        d.set("train.lr_final", lr_final);
        d.set("train.cond_dropout", cond_dropout);
        return d.content_hash_hex();
    }
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_trace;       // per step
    std::vector<double> null_probe_trace; // fixed null-conditioned batch, every log_every steps

    double mean_loss(std::size_t begin, std::size_t end) const {
        double acc = 0;
        std::size_t n = 0;
        for (std::size_t i = begin; i < end && i < loss_trace.size(); ++i, ++n) acc += loss_trace[i];
        return n ? acc / static_cast<double>(n) : 0.0;
    }
    double first_100_mean() const { return mean_loss(0, 100); }
    double last_100_mean() const {
        const std::size_t n = loss_trace.size();
        return mean_loss(n > 100 ? n - 100 : 0, n);
    }
};

// Denoising objective over the dataset; predictor and encoder optimized
// jointly, with conditioning dropout so the null branch is trained too.
inline TrainResult train_base(const world::World& w, const world::Dataset& ds,
                              const BaseTrainConfig& cfg) {
    using Mat = Eigen::MatrixXf;
    require(ds.size() >= 1, "empty dataset");
    require(ds.world_hash == w.hash(), "dataset does not belong to this world");
    require(cfg.arch.latent_dim == world::World::kPixels, "latent dim must match image pixels");
    require(cfg.batch >= 1, "batch size must be positive");
    require(cfg.cond_dropout >= 0.0 && cfg.cond_dropout < 1.0, "dropout must lie in [0,1)");

    Rng root(cfg.seed);
    Rng enc_rng = root.child(0xe7c);
    Rng pred_rng = root.child(0x9ded);
    Rng loop_rng = root.child(0x100b);

    TrainResult res;
    res.checkpoint.schedule = make_schedule(cfg.schedule_T, cfg.beta_min, cfg.beta_max);
    res.checkpoint.encoder = PromptEncoder<float>(cfg.arch.embed_dim, w.vocab_size(), enc_rng);
    res.checkpoint.predictor = Predictor<float>::init(cfg.arch, pred_rng);
    res.checkpoint.predictor.bind_schedule(res.checkpoint.schedule.alpha_bars);
    res.checkpoint.provenance = {"base", cfg.hash_hex(), "", cfg.seed};

    auto& model = res.checkpoint.predictor;
    auto& encoder = res.checkpoint.encoder;
    const auto& sched = res.checkpoint.schedule;
    const int B = cfg.batch;
    const int d = cfg.arch.latent_dim;
    const int null_id = w.null_id();

    // Fixed probe: null-conditioned denoising loss, to watch the unconditional
    // branch during training.
    Mat probe_Z(d, B), probe_eps(d, B), probe_C(cfg.arch.embed_dim, B);
    std::vector<int> probe_t(static_cast<std::size_t>(B));
    {
        Rng pr = root.child(0x9206e);
        for (int j = 0; j < B; ++j) {
            const int idx = pr.uniform_int(ds.size());
            const int t = pr.uniform_int(sched.T);
            probe_t[static_cast<std::size_t>(j)] = t;
            Eigen::VectorXf eps(d);
            for (int i = 0; i < d; ++i) eps[i] = static_cast<float>(pr.normal());
            probe_eps.col(j) = eps;
            probe_Z.col(j) = forward_diffuse(Eigen::MatrixXf(ds.images.col(idx)), t, eps, sched);
        }
    }
    auto probe_loss = [&]() {
        for (int j = 0; j < B; ++j) probe_C.col(j) = encoder.encode(TokenSeq{null_id});
        const Mat E = model.forward(probe_Z, std::span<const int>(probe_t), probe_C);
        return static_cast<double>((E - probe_eps).squaredNorm()) / (static_cast<double>(d) * B);
    };

    AdamOptimizer<float> opt(cfg.lr);
    auto views = [&]() {
        std::vector<ParamView<float>> v;
        for (auto r : model.params()) v.push_back({r.m->data(), r.m->size()});
        v.push_back({encoder.base_table().data(), encoder.base_table().size()});
        return v;
    };

    Mat Z(d, B), eps(d, B), C(cfg.arch.embed_dim, B);
    std::vector<int> ts(static_cast<std::size_t>(B));
    std::vector<TokenSeq> toks(static_cast<std::size_t>(B));

    for (int step = 0; step < cfg.steps; ++step) {
        if (cfg.steps > 1) {
            const double frac = static_cast<double>(step) / (cfg.steps - 1);
            opt.set_lr(cfg.lr_final + 0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(3.14159265358979 * frac)));
        }
        for (int j = 0; j < B; ++j) {
            const int idx = loop_rng.uniform_int(ds.size());
            const int t = loop_rng.uniform_int(sched.T);
            ts[static_cast<std::size_t>(j)] = t;
            const bool drop = loop_rng.uniform() < cfg.cond_dropout;
            toks[static_cast<std::size_t>(j)] =
                drop ? TokenSeq{null_id} : ds.labels[static_cast<std::size_t>(idx)].tokens();
            C.col(j) = encoder.encode(toks[static_cast<std::size_t>(j)]);
            for (int i = 0; i < d; ++i) eps(i, j) = static_cast<float>(loop_rng.normal());
            const double ab = sched.alpha_bars[static_cast<std::size_t>(t)];
            Z.col(j) = static_cast<float>(std::sqrt(ab)) * ds.images.col(idx) +
                       static_cast<float>(std::sqrt(1.0 - ab)) * eps.col(j);
        }

        Predictor<float>::Cache cache;
        const Mat E = model.forward(Z, std::span<const int>(ts), C, &cache);
        const double loss = static_cast<double>((E - eps).squaredNorm()) / (static_cast<double>(d) * B);
        if (!std::isfinite(loss))
            throw RuntimeFailure("non-finite training loss at step " + std::to_string(step));
        res.loss_trace.push_back(loss);

        const Mat dE = (E - eps) * static_cast<float>(2.0 / (static_cast<double>(d) * B));
        Mat dC;
        Predictor<float> grads = model.backward(cache, dE, &dC);

        Mat enc_grad = Mat::Zero(cfg.arch.embed_dim, encoder.base_vocab());
        for (int j = 0; j < B; ++j) {
            const auto& seq = toks[static_cast<std::size_t>(j)];
            for (int id : seq)
                enc_grad.col(id) += dC.col(j) / static_cast<float>(seq.size());
        }

        std::vector<ParamView<float>> gv;
        for (auto r : grads.params()) gv.push_back({r.m->data(), r.m->size()});
        gv.push_back({enc_grad.data(), enc_grad.size()});
        auto pv = views();
        opt.step(pv, gv);

        if (cfg.log_every > 0 && step % cfg.log_every == 0) res.null_probe_trace.push_back(probe_loss());
    }
    if (cfg.log_every > 0) res.null_probe_trace.push_back(probe_loss());

    return res;
}

} // namespace stereo::diffusion

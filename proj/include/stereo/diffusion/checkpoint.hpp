#pragma once

#include <string>

#include "stereo/core/io.hpp"
#include "stereo/diffusion/encoder.hpp"
#include "stereo/diffusion/predictor.hpp"
#include "stereo/diffusion/schedule.hpp"

namespace stereo::diffusion {

// Image <-> latent map. Identity at this scale; kept as an explicit seam so
// the rest of the code never assumes image space and latent space coincide.
struct LatentCodec {
    enum class Mode { identity };
    Mode mode = Mode::identity;

    template <class M>
    M encode(const M& images) const {
        return images;
    }
    template <class M>
    M decode(const M& latents) const {
        return latents;
    }
};

struct Provenance {
    std::string stage;       // base | ste | reo | negative | remap | synonyms
    std::string config_hash; // hash of the config that produced this checkpoint
    std::string parent_hash; // content hash of the parent checkpoint, empty for base
    std::uint64_t seed = 0;
};

struct Checkpoint {
    Predictor<float> predictor;
    PromptEncoder<float> encoder;
    NoiseSchedule schedule;
    LatentCodec codec;
    Provenance provenance;

    // Hash over the learned state (predictor + base embeddings + betas).
    std::string content_hash_hex() const {
        Hasher h;
        for (const auto& r : predictor.params()) {
            h.update(r.name);
            h.update_array(r.m->data(), static_cast<std::size_t>(r.m->size()));
        }
        h.update_array(encoder.base_table().data(),
                       static_cast<std::size_t>(encoder.base_table().size()));
        h.update_array(schedule.betas.data(), schedule.betas.size());
        return h.hex();
    }

    void save(const std::string& path) const {
        ArrayContainer c;
        c.manifest.set("kind", std::string("checkpoint"));
        c.manifest.set("arch.latent_dim", predictor.arch.latent_dim);
        c.manifest.set("arch.time_dim", predictor.arch.time_dim);
        c.manifest.set("arch.embed_dim", predictor.arch.embed_dim);
        c.manifest.set("arch.width", predictor.arch.width);
        c.manifest.set("provenance.stage", provenance.stage);
        c.manifest.set("provenance.config_hash", provenance.config_hash);
        c.manifest.set("provenance.parent_hash", provenance.parent_hash);
        c.manifest.set("provenance.seed", provenance.seed);
        c.manifest.set("state.hash", content_hash_hex());
        for (const auto& r : predictor.params())
            c.arrays.push_back(to_array(std::string("predictor.") + r.name, *r.m));
        c.arrays.push_back(to_array("encoder.table", encoder.base_table()));
        NamedArray betas;
        betas.name = "schedule.betas";
        betas.shape = {schedule.betas.size()};
        for (double b : schedule.betas) betas.data.push_back(static_cast<float>(b));
        c.arrays.push_back(std::move(betas));
        ArrayContainer copy = c;
        copy.save(path);
    }

    static Checkpoint load(const std::string& path) {
        ArrayContainer c = ArrayContainer::load(path);
        if (c.manifest.get_or("kind", "") != "checkpoint")
            throw RuntimeFailure("not a checkpoint file: " + path);
        Checkpoint ck;
        ck.predictor.arch.latent_dim = static_cast<int>(c.manifest.get_int("arch.latent_dim"));
        ck.predictor.arch.time_dim = static_cast<int>(c.manifest.get_int("arch.time_dim"));
        ck.predictor.arch.embed_dim = static_cast<int>(c.manifest.get_int("arch.embed_dim"));
        ck.predictor.arch.width = static_cast<int>(c.manifest.get_int("arch.width"));
        for (const auto& r : ck.predictor.params()) *r.m = from_array(c.array(std::string("predictor.") + r.name));
        ck.encoder.base_table() = from_array(c.array("encoder.table"));
        const auto& betas = c.array("schedule.betas");
        std::vector<double> b(betas.data.begin(), betas.data.end());
        ck.schedule = NoiseSchedule::from_betas(std::move(b));
        ck.provenance.stage = c.manifest.get_or("provenance.stage", "");
        ck.provenance.config_hash = c.manifest.get_or("provenance.config_hash", "");
        ck.provenance.parent_hash = c.manifest.get_or("provenance.parent_hash", "");
        ck.provenance.seed = static_cast<std::uint64_t>(c.manifest.get_int("provenance.seed"));
        ck.predictor.bind_schedule(ck.schedule.alpha_bars);
        const std::string expect = c.manifest.get_or("state.hash", "");
        if (!expect.empty() && ck.content_hash_hex() != expect)
            throw RuntimeFailure("checkpoint state hash mismatch: " + path);
        return ck;
    }

private:
    static NamedArray to_array(const std::string& name, const Eigen::MatrixXf& m) {
        NamedArray a;
        a.name = name;
        a.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
        a.data.assign(m.data(), m.data() + m.size());
        return a;
    }

    static Eigen::MatrixXf from_array(const NamedArray& a) {
        require(a.shape.size() == 2, "expected a 2-d array: " + a.name);
        Eigen::MatrixXf m(static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
        std::copy(a.data.begin(), a.data.end(), m.data());
        return m;
    }
};

} // namespace stereo::diffusion

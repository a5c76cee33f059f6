#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <fstream>

#include "stereo/core/io.hpp"
#include "stereo/world/render.hpp"

namespace stereo::world {

// Images as columns (kPixels x n), labels aligned by column.
struct Dataset {
    Eigen::MatrixXf images;
    std::vector<PromptSpec> labels;
    std::uint64_t world_hash = 0;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(images.cols()); }

    std::uint64_t checksum() const {
        Hasher h;
        h.update_array(images.data(), static_cast<std::size_t>(images.size()));
        for (const auto& l : labels)
            for (int id : l.tokens()) h.update(&id, sizeof id);
        return h.digest();
    }
};

// Balanced across all valid prompt classes: class counts differ by at most one.
inline Dataset synth_dataset(const World& w, int n, std::uint64_t seed, const RenderSettings& s = {}) {
    require(n >= 1, "dataset size must be at least 1");
    const auto classes = w.all_prompts();
    Dataset ds;
    ds.world_hash = w.hash();
    ds.seed = seed;
    ds.images.resize(World::kPixels, n);
    ds.labels.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& spec = classes[static_cast<std::size_t>(i) % classes.size()];
        auto sample = render(w, spec, Rng::mix(seed, static_cast<std::uint64_t>(i)), s);
        ds.images.col(i) = sample.image;
        ds.labels.push_back(spec);
    }
    return ds;
}

// On-disk layout: manifest.txt (key=value), images.bin (u64 shape header n,16,16
// then row-major float32), labels.txt (one token-id list per line).
inline void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(dir + "/images.bin", std::ios::binary);
        require(out.good(), "cannot write " + dir + "/images.bin");
        const std::uint64_t shape[3] = {static_cast<std::uint64_t>(ds.size()), World::kImageSize,
                                        World::kImageSize};
        out.write(reinterpret_cast<const char*>(shape), sizeof shape);
        for (int i = 0; i < ds.size(); ++i)
            out.write(reinterpret_cast<const char*>(ds.images.col(i).data()),
                      World::kPixels * sizeof(float));
    }
    {
        std::ofstream out(dir + "/labels.txt");
        for (const auto& l : ds.labels) {
            for (std::size_t j = 0; j < l.tokens().size(); ++j)
                out << (j ? " " : "") << l.tokens()[j];
            out << '\n';
        }
    }
    KvDoc manifest;
    manifest.set("world.hash", ds.world_hash);
    manifest.set("seed", ds.seed);
    manifest.set("count", ds.size());
    manifest.set("checksum", ds.checksum());
    manifest.save(dir + "/manifest.txt");
}

inline Dataset load_dataset(const World& w, const std::string& dir) {
    KvDoc manifest = KvDoc::load(dir + "/manifest.txt");
    Dataset ds;
    ds.world_hash = static_cast<std::uint64_t>(manifest.get_int("world.hash"));
    ds.seed = static_cast<std::uint64_t>(manifest.get_int("seed"));
    require(ds.world_hash == w.hash(), "dataset was built for a different world: " + dir);

    std::ifstream in(dir + "/images.bin", std::ios::binary);
    require(in.good(), "cannot open " + dir + "/images.bin");
    std::uint64_t shape[3];
    in.read(reinterpret_cast<char*>(shape), sizeof shape);
    if (!in.good() || shape[1] != World::kImageSize || shape[2] != World::kImageSize)
        throw RuntimeFailure("bad image file header: " + dir);
    const int n = static_cast<int>(shape[0]);
    ds.images.resize(World::kPixels, n);
    for (int i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(ds.images.col(i).data()), World::kPixels * sizeof(float));
        if (!in.good()) throw RuntimeFailure("truncated image file: " + dir);
    }

    std::ifstream lab(dir + "/labels.txt");
    require(lab.good(), "cannot open " + dir + "/labels.txt");
    std::string line;
    while (std::getline(lab, line)) {
        line = KvDoc::trim(line);
        if (line.empty()) continue;
        std::vector<int> ids;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t next = line.find(' ', pos);
            if (next == std::string::npos) next = line.size();
            ids.push_back(std::stoi(line.substr(pos, next - pos)));
            pos = next + 1;
        }
        ds.labels.push_back(PromptSpec::make(w, ids));
    }
    require(static_cast<int>(ds.labels.size()) == n, "label count does not match image count: " + dir);
    if (manifest.has("checksum"))
        require(ds.checksum() == static_cast<std::uint64_t>(manifest.get_int("checksum")),
                "dataset checksum mismatch: " + dir);
    return ds;
}

} // namespace stereo::world

#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "stereo/core/errors.hpp"
#include "stereo/core/hash.hpp"
#include "stereo/core/rng.hpp"
#include "stereo/world/world.hpp"

namespace stereo::diffusion {

using TokenSeq = std::vector<int>;

// Embedding table over the base vocabulary, mean-pooled over prompt tokens.
// Inverted tokens extend the vocabulary without touching the base table.
template <class S>
class PromptEncoder {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    PromptEncoder() = default;

    PromptEncoder(int embed_dim, int base_vocab, Rng& rng) : table_(embed_dim, base_vocab) {
        for (int j = 0; j < base_vocab; ++j)
            for (int i = 0; i < embed_dim; ++i)
                table_(i, j) = static_cast<S>(rng.normal(0.0, 0.5));
    }

    int embed_dim() const { return static_cast<int>(table_.rows()); }
    int base_vocab() const { return static_cast<int>(table_.cols()); }
    int vocab_size() const { return base_vocab() + static_cast<int>(extended_.size()); }

    Mat& base_table() { return table_; }
    const Mat& base_table() const { return table_; }

    Vec embedding(int token_id) const {
        if (token_id < base_vocab()) {
            require(token_id >= 0, "negative token id");
            return table_.col(token_id);
        }
        const int k = token_id - base_vocab();
        require(k < static_cast<int>(extended_.size()),
                "unknown token id " + std::to_string(token_id));
        return extended_[static_cast<std::size_t>(k)].embedding;
    }

    Vec encode(std::span<const int> tokens) const {
        require(!tokens.empty(), "cannot encode an empty token sequence");
        Vec out = Vec::Zero(embed_dim());
        for (int id : tokens) out += embedding(id);
        return out / static_cast<S>(tokens.size());
    }

    Vec encode(const TokenSeq& tokens) const { return encode(std::span<const int>(tokens)); }
    Vec encode(const world::PromptSpec& p) const { return encode(std::span<const int>(p.tokens())); }

    int add_token(const std::string& name, Vec embedding) {
        require(embedding.size() == embed_dim(), "embedding dimension mismatch");
        for (const auto& e : extended_)
            require(e.name != name, "extended token name already registered: " + name);
        const int id = vocab_size();
        extended_.push_back({name, std::move(embedding)});
        return id;
    }

    std::string token_name(const world::World& w, int id) const {
        if (id < base_vocab()) return w.token(id).name;
        return extended_[static_cast<std::size_t>(id - base_vocab())].name;
    }

    std::uint64_t base_table_hash() const {
        return Hasher{}.update_array(table_.data(), static_cast<std::size_t>(table_.size())).digest();
    }

    template <class T>
    PromptEncoder<T> cast() const {
        PromptEncoder<T> out;
        out.table_ = table_.template cast<T>();
        for (const auto& e : extended_)
            out.extended_.push_back({e.name, e.embedding.template cast<T>()});
        return out;
    }

    struct Extended {
        std::string name;
        Vec embedding;
    };
    const std::vector<Extended>& extended() const { return extended_; }

    template <class T>
    friend class PromptEncoder;

private:
    Mat table_;
    std::vector<Extended> extended_;
};

} // namespace stereo::diffusion

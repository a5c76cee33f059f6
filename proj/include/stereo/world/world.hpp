#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "stereo/core/errors.hpp"
#include "stereo/core/hash.hpp"

namespace stereo::world {

enum class TokenKind { shape, background, null_token };

enum class ShapeGeometry { circle, square, cross, triangle };
enum class BackgroundTexture { plain, stripes, checker };

// Geometry / texture parameters the renderer consumes. Exactly one of the two
// parameter sets is meaningful, selected by the token kind.
struct RenderParams {
    ShapeGeometry shape = ShapeGeometry::circle;
    double base_radius = 4.5;
    double intensity = 0.95;

    BackgroundTexture texture = BackgroundTexture::plain;
    double level_lo = 0.10;
    double level_hi = 0.40;
    int period = 4; // stripes: row period; checker: cell edge is period/2 doubled below
};

struct ConceptToken {
    int id = 0;
    std::string name;
    TokenKind kind = TokenKind::null_token;
    RenderParams render_params;
};

class World;

// A validated base-vocabulary prompt: 1-2 tokens, at most one shape, at most
// one background, the null token only alone. Token ids kept sorted so equal
// prompts compare equal regardless of the order they were written in.
class PromptSpec {
public:
    static PromptSpec make(const World& w, std::vector<int> token_ids);
    static PromptSpec parse(const World& w, const std::string& text);

    const std::vector<int>& tokens() const { return tokens_; }
    bool contains(int token_id) const {
        return std::find(tokens_.begin(), tokens_.end(), token_id) != tokens_.end();
    }
    bool operator==(const PromptSpec& o) const { return tokens_ == o.tokens_; }
    bool operator<(const PromptSpec& o) const { return tokens_ < o.tokens_; }

    std::string str(const World& w) const;

private:
    PromptSpec() = default;
    std::vector<int> tokens_;
};

class World {
public:
    static constexpr int kImageSize = 16;
    static constexpr int kPixels = kImageSize * kImageSize;

    // The default world: four shapes over three backgrounds plus the null token.
    static World standard() {
        World w;
        auto add = [&](const std::string& name, TokenKind kind, RenderParams rp) {
            ConceptToken t;
            t.id = static_cast<int>(w.tokens_.size());
            t.name = name;
            t.kind = kind;
            t.render_params = rp;
            w.tokens_.push_back(t);
        };
        add("<null>", TokenKind::null_token, {});
        RenderParams rp;
        rp.shape = ShapeGeometry::circle;
        add("circle", TokenKind::shape, rp);
        rp.shape = ShapeGeometry::square;
        add("square", TokenKind::shape, rp);
        rp.shape = ShapeGeometry::cross;
        add("cross", TokenKind::shape, rp);
        rp.shape = ShapeGeometry::triangle;
        add("triangle", TokenKind::shape, rp);
        RenderParams bp;
        bp.texture = BackgroundTexture::plain;
        add("plain", TokenKind::background, bp);
        bp.texture = BackgroundTexture::stripes;
        add("stripes", TokenKind::background, bp);
        bp.texture = BackgroundTexture::checker;
        add("checker", TokenKind::background, bp);
        w.validate();
        return w;
    }

    const std::vector<ConceptToken>& tokens() const { return tokens_; }
    const ConceptToken& token(int id) const {
        require(id >= 0 && id < static_cast<int>(tokens_.size()), "unknown token id " + std::to_string(id));
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::optional<int> find(const std::string& name) const {
        for (const auto& t : tokens_)
            if (t.name == name) return t.id;
        return std::nullopt;
    }

    int id_of(const std::string& name) const {
        auto id = find(name);
        require(id.has_value(), "unknown token name: " + name);
        return *id;
    }

    int null_id() const {
        for (const auto& t : tokens_)
            if (t.kind == TokenKind::null_token) return t.id;
        throw RuntimeFailure("world has no null token");
    }

    std::vector<int> shape_ids() const { return ids_of(TokenKind::shape); }
    std::vector<int> background_ids() const { return ids_of(TokenKind::background); }

    // Every concrete concept (shapes and backgrounds, no null).
    std::vector<int> concept_ids() const {
        std::vector<int> out = shape_ids();
        auto bg = background_ids();
        out.insert(out.end(), bg.begin(), bg.end());
        return out;
    }

    int vocab_size() const { return static_cast<int>(tokens_.size()); }

    // All valid prompts excluding the bare null prompt.
    std::vector<PromptSpec> all_prompts() const {
        std::vector<PromptSpec> out;
        for (int s : shape_ids()) out.push_back(PromptSpec::make(*this, {s}));
        for (int b : background_ids()) out.push_back(PromptSpec::make(*this, {b}));
        for (int s : shape_ids())
            for (int b : background_ids()) out.push_back(PromptSpec::make(*this, {s, b}));
        return out;
    }

    std::vector<PromptSpec> prompts_containing(int concept_id) const {
        std::vector<PromptSpec> out;
        for (const auto& p : all_prompts())
            if (p.contains(concept_id)) out.push_back(p);
        return out;
    }

    std::uint64_t hash() const {
        Hasher h;
        for (const auto& t : tokens_) {
            h.update(t.name);
            int k = static_cast<int>(t.kind);
            h.update(&k, sizeof k);
            h.update(&t.render_params, sizeof t.render_params);
        }
        return h.digest();
    }

    void validate() const {
        int nulls = 0, shapes = 0, bgs = 0;
        for (const auto& t : tokens_) {
            switch (t.kind) {
                case TokenKind::null_token: ++nulls; break;
                case TokenKind::shape: ++shapes; break;
                case TokenKind::background: ++bgs; break;
            }
        }
        require(nulls == 1, "world must have exactly one null token");
        require(shapes >= 4, "world must have at least 4 shape tokens");
        require(bgs >= 3, "world must have at least 3 background tokens");
        for (std::size_t i = 0; i < tokens_.size(); ++i)
            require(tokens_[i].id == static_cast<int>(i), "token ids must be dense and unique");
    }

private:
    std::vector<int> ids_of(TokenKind kind) const {
        std::vector<int> out;
        for (const auto& t : tokens_)
            if (t.kind == kind) out.push_back(t.id);
        return out;
    }

    std::vector<ConceptToken> tokens_;
};

inline PromptSpec PromptSpec::make(const World& w, std::vector<int> token_ids) {
    require(!token_ids.empty(), "prompt must be non-empty");
    require(token_ids.size() <= 2, "prompt has at most two tokens");
    std::sort(token_ids.begin(), token_ids.end());
    require(std::adjacent_find(token_ids.begin(), token_ids.end()) == token_ids.end(),
            "prompt tokens must be distinct");
    int shapes = 0, bgs = 0, nulls = 0;
    for (int id : token_ids) {
        switch (w.token(id).kind) {
            case TokenKind::shape: ++shapes; break;
            case TokenKind::background: ++bgs; break;
            case TokenKind::null_token: ++nulls; break;
        }
    }
    require(shapes <= 1, "at most one shape token per prompt");
    require(bgs <= 1, "at most one background token per prompt");
    require(nulls == 0 || token_ids.size() == 1, "null token appears only alone");
    PromptSpec p;
    p.tokens_ = std::move(token_ids);
    return p;
}

inline PromptSpec PromptSpec::parse(const World& w, const std::string& text) {
    std::vector<int> ids;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            ids.push_back(w.id_of(cur));
            cur.clear();
        }
    };
    for (char c : text) {
        if (c == ' ' || c == '\t')
            flush();
        else
            cur += c;
    }
    flush();
    return make(w, std::move(ids));
}

inline std::string PromptSpec::str(const World& w) const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (i) out += ' ';
        out += w.token(tokens_[i]).name;
    }
    return out;
}

// Prompt-side oracle: exact token membership, nothing else.
inline int oracle_prompt(const PromptSpec& p, int concept_id) {
    return p.contains(concept_id) ? 1 : 0;
}

} // namespace stereo::world

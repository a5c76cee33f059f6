#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stereo/core/errors.hpp"
#include "stereo/core/hash.hpp"

namespace stereo {

// Flat `dotted.key = value` text document. Used for configs and manifests:
// line-oriented, diffable, order-independent semantics.
class KvDoc {
public:
    bool has(const std::string& key) const { return map_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { map_[key] = value; }
    void set(const std::string& key, long long v) { map_[key] = std::to_string(v); }
    void set(const std::string& key, int v) { map_[key] = std::to_string(v); }
    void set(const std::string& key, std::uint64_t v) { map_[key] = std::to_string(v); }
    void set(const std::string& key, double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        map_[key] = buf;
    }
    void set(const std::string& key, bool v) { map_[key] = v ? "true" : "false"; }

    const std::string& get(const std::string& key) const {
        auto it = map_.find(key);
        require(it != map_.end(), "missing key: " + key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = map_.find(key);
        return it == map_.end() ? fallback : it->second;
    }

    long long get_int(const std::string& key) const {
        const std::string& s = get(key);
        try {
            std::size_t pos = 0;
            long long v = std::stoll(s, &pos);
            require(pos == s.size(), "trailing characters in integer for " + key);
            return v;
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("not an integer: " + key + " = " + s);
        }
    }

    double get_double(const std::string& key) const {
        const std::string& s = get(key);
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            require(pos == s.size(), "trailing characters in number for " + key);
            return v;
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("not a number: " + key + " = " + s);
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& s = get(key);
        if (s == "true") return true;
        if (s == "false") return false;
        throw ValidationError("not a boolean: " + key + " = " + s);
    }

    const std::map<std::string, std::string>& entries() const { return map_; }

    // Canonical text: sorted keys, one per line. Key-order permutations of the
    // same mapping serialize identically, so hashes agree.
    std::string canonical_text() const {
        std::string out;
        for (const auto& [k, v] : map_) {
            out += k;
            out += " = ";
            out += v;
            out += '\n';
        }
        return out;
    }

    std::uint64_t content_hash() const { return Hasher{}.update(canonical_text()).digest(); }
    std::string content_hash_hex() const { return Hasher{}.update(canonical_text()).hex(); }

    static KvDoc parse(const std::string& text, const std::string& origin = "<string>") {
        KvDoc doc;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip_comment(line);
            s = trim(s);
            if (s.empty()) continue;
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(s.substr(0, eq));
            std::string value = trim(s.substr(eq + 1));
            if (key.empty())
                throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
            doc.map_[key] = value;
        }
        return doc;
    }

    static KvDoc load(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "cannot write file: " + path);
        out << canonical_text();
    }

    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

private:
    static std::string strip_comment(const std::string& s) {
        auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    std::map<std::string, std::string> map_;
};

} // namespace stereo

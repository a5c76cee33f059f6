#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stereo/core/errors.hpp"
#include "stereo/core/hash.hpp"
#include "stereo/core/kv.hpp"

namespace stereo {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

struct NamedArray {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

// Single-file container: fixed header, key=value manifest block, then named
// float32 arrays (shape-prefixed, little-endian). The manifest carries a hash
// of the array section so payload corruption is detectable on load.
//
//   magic "SLAB" | u32 version | u64 manifest_len | manifest bytes
//   | u32 array_count | per array: u32 name_len, name, u32 ndim, u64 dims..., f32 data
//
// Readers accept any file whose major version matches kFormatMajor.
class ArrayContainer {
public:
    static constexpr std::uint32_t kFormatMajor = 1;
    static constexpr std::uint32_t kFormatMinor = 0;

    KvDoc manifest;
    std::vector<NamedArray> arrays;

    const NamedArray& array(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.name == name) return a;
        throw RuntimeFailure("array not found in container: " + name);
    }

    bool has_array(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.name == name) return true;
        return false;
    }

    std::string payload_hash_hex() const {
        const std::string blob = encode_arrays();
        return Hasher{}.update(blob).hex();
    }

    void save(const std::string& path) {
        const std::string blob = encode_arrays();
        manifest.set("format.version", version_string());
        manifest.set("content.hash", Hasher{}.update(blob).hex());

        std::ofstream out(path, std::ios::binary);
        require(out.good(), "cannot write file: " + path);
        out.write("SLAB", 4);
        write_u32(out, kFormatMajor * 1000 + kFormatMinor);
        const std::string mtext = manifest.canonical_text();
        write_u64(out, mtext.size());
        out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out.good()) throw RuntimeFailure("short write: " + path);
    }

    static ArrayContainer load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        require(in.good(), "cannot open file: " + path);
        char magic[4];
        in.read(magic, 4);
        if (!in.good() || std::memcmp(magic, "SLAB", 4) != 0)
            throw RuntimeFailure("not a container file: " + path);
        const std::uint32_t ver = read_u32(in, path);
        if (ver / 1000 != kFormatMajor)
            throw RuntimeFailure("unsupported container version in " + path);
        const std::uint64_t mlen = read_u64(in, path);
        std::string mtext(mlen, '\0');
        in.read(mtext.data(), static_cast<std::streamsize>(mlen));
        if (!in.good()) throw RuntimeFailure("truncated manifest: " + path);

        ArrayContainer c;
        c.manifest = KvDoc::parse(mtext, path);

        const std::uint32_t count = read_u32(in, path);
        std::string blob;
        {
            std::ostringstream rest;
            rest << in.rdbuf();
            blob = rest.str();
        }
        // Re-assemble the array section bytes for the integrity check.
        std::string section;
        section.resize(4);
        std::memcpy(section.data(), &count, 4);
        section += blob;
        const std::string expect = c.manifest.get_or("content.hash", "");
        if (!expect.empty() && Hasher{}.update(section).hex() != expect)
            throw RuntimeFailure("content hash mismatch: " + path);

        std::size_t off = 0;
        auto take = [&](void* dst, std::size_t n) {
            if (off + n > blob.size()) throw RuntimeFailure("truncated arrays: " + path);
            std::memcpy(dst, blob.data() + off, n);
            off += n;
        };
        for (std::uint32_t i = 0; i < count; ++i) {
            NamedArray a;
            std::uint32_t name_len = 0;
            take(&name_len, 4);
            a.name.resize(name_len);
            take(a.name.data(), name_len);
            std::uint32_t ndim = 0;
            take(&ndim, 4);
            a.shape.resize(ndim);
            for (std::uint32_t d = 0; d < ndim; ++d) take(&a.shape[d], 8);
            a.data.resize(a.element_count());
            take(a.data.data(), a.data.size() * sizeof(float));
            c.arrays.push_back(std::move(a));
        }
        return c;
    }

private:
    std::string version_string() const {
        return std::to_string(kFormatMajor) + "." + std::to_string(kFormatMinor);
    }

    std::string encode_arrays() const {
        std::string out;
        const std::uint32_t count = static_cast<std::uint32_t>(arrays.size());
        append(out, &count, 4);
        for (const auto& a : arrays) {
            const std::uint32_t name_len = static_cast<std::uint32_t>(a.name.size());
            append(out, &name_len, 4);
            out += a.name;
            const std::uint32_t ndim = static_cast<std::uint32_t>(a.shape.size());
            append(out, &ndim, 4);
            for (auto d : a.shape) append(out, &d, 8);
            append(out, a.data.data(), a.data.size() * sizeof(float));
        }
        return out;
    }

    static void append(std::string& out, const void* p, std::size_t n) {
        out.append(static_cast<const char*>(p), n);
    }

    static void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
    static void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

    static std::uint32_t read_u32(std::istream& in, const std::string& path) {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in.good()) throw RuntimeFailure("truncated file: " + path);
        return v;
    }
    static std::uint64_t read_u64(std::istream& in, const std::string& path) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        if (!in.good()) throw RuntimeFailure("truncated file: " + path);
        return v;
    }
};

} // namespace stereo

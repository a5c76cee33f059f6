#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>

namespace stereo {

// FNV-1a 64-bit. Content integrity and cache keys, not cryptography.
class Hasher {
public:
    Hasher& update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }

    Hasher& update(const std::string& s) { return update(s.data(), s.size()); }

    template <class Scalar>
    Hasher& update_array(const Scalar* data, std::size_t count) {
        return update(data, count * sizeof(Scalar));
    }

    std::uint64_t digest() const { return state_; }

    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
        return std::string(buf);
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t hash_bytes(const void* data, std::size_t n) {
    return Hasher{}.update(data, n).digest();
}

inline std::string hash_hex(const std::string& s) {
    return Hasher{}.update(s).hex();
}

} // namespace stereo

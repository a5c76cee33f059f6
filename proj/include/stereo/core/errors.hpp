#pragma once

#include <stdexcept>
#include <string>

namespace stereo {

// Bad inputs, bad config, missing files named by the user. CLI maps these to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures discovered mid-run (non-finite loss, oracle below spec, corrupt file).
// CLI maps these to exit 1.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

} // namespace stereo

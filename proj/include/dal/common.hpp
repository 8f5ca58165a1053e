#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dal {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// FNV-1a, used for dataset hashes and seed derivation tags.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace dal

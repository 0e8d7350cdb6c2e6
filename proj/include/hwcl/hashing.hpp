#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace hwcl {

// FNV-1a, enough to fingerprint configs and batch contents for equality
// checks; not a cryptographic hash.
inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a(const std::vector<double>& v, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

std::string to_hex(std::uint64_t value);

} // namespace hwcl

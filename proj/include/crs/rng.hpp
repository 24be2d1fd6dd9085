#pragma once

// Portable draws on top of std::mt19937_64: the standard distributions are
// implementation-defined, so seeded output would differ across toolchains.

#include <cstdint>
#include <random>
#include <string_view>

namespace crs {

using Rng = std::mt19937_64;

inline std::size_t pick_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Uniform in [0, 1).
inline double unit_real(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class Vec>
void shuffle_portable(Vec& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = pick_index(rng, i);
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

} // namespace crs

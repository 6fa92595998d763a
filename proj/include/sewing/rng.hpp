#pragma once

#include <cmath>
#include <cstdint>

namespace sewing {

// Counter-based generator: every draw is a pure function of its key, so
// refining a grid or running paths in parallel never shifts the stream.

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    return h;
}

/// Uniform in (0,1), never exactly 0.
inline double u01(std::uint64_t key) {
    return (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal keyed by (seed, a, b, c, d) via Box-Muller.
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0, std::uint64_t d = 0) {
    std::uint64_t k1 = hash_key(seed, a, b, c, d);
    std::uint64_t k2 = mix64(k1 ^ 0xd1b54a32d192ed03ULL);
    double u = u01(k1), v = u01(k2);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
}

/// Small stateful stream for samplers; draws are hash_key(seed, counter++).
struct KeyStream {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit KeyStream(std::uint64_t s) : seed(s) {}

    double uniform() { return u01(hash_key(seed, counter++)); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        std::uint64_t n = counter++;
        return keyed_normal(seed, n);
    }
    std::uint64_t bits() { return hash_key(seed, counter++); }
};

}  // namespace sewing

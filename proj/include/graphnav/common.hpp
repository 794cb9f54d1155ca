#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graphnav {

// Thrown on contract violations (shape mismatches, bad indices, bad config).
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw error(msg);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Mixes any number of integer keys into one seed.
inline uint64_t mix_seed(std::initializer_list<uint64_t> keys) {
    uint64_t state = 0x6a09e667f3bcc908ull;
    for (uint64_t k : keys) {
        state ^= k + 0x9e3779b97f4a7c15ull + (state << 6) + (state >> 2);
        splitmix64(state);
    }
    return splitmix64(state);
}

// Deterministic uniform double in [lo, hi). Avoids std::uniform_real_distribution
// so streams are identical across standard library implementations.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi_inclusive) {
    const uint64_t span = static_cast<uint64_t>(hi_inclusive - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

}  // namespace graphnav

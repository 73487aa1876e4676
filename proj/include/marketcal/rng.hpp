#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mcal {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Stable per-purpose seed: same (base, tag, a, b) always yields the same seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    std::uint64_t s = splitmix64(base ^ hash_tag(tag));
    s = splitmix64(s ^ (a * 0xD6E8FEB86659FD93ULL));
    return splitmix64(s ^ (b * 0xA0761D6478BD642FULL));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

}  // namespace mcal

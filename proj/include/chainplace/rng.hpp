#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace chainplace {

/// Counter-based mixing function (SplitMix64). Used to derive independent,
/// replayable seeds for every (group, level, run) cell from one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Seed for one run cell. Any single run is replayable in isolation.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view group_id,
                                 int load_level, int run_index) {
    std::uint64_t h = splitmix64(base_seed ^ fnv1a64(group_id));
    h = splitmix64(h ^ static_cast<std::uint64_t>(load_level));
    h = splitmix64(h ^ static_cast<std::uint64_t>(run_index));
    return h;
}

using Rng = std::mt19937_64;

/// Uniform double in (0, 1]; never returns 0 so it is safe under log().
inline double uniform_unit(Rng& rng) {
    return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Normal draw via Box-Muller. std::normal_distribution is not specified
/// bit-for-bit across standard libraries; this is.
inline double normal_draw(Rng& rng, double mean, double stddev) {
    const double u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    return mean + stddev * z;
}

/// Uniform index in [0, n). The modulo bias is ~n/2^64, irrelevant here.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

} // namespace chainplace

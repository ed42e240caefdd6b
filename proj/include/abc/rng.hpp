#pragma once

// Random streams. Every replica gets its own mt19937_64 seeded through
// SplitMix64 from (seed, replica index), so parallel runs are reproducible
// regardless of scheduling. Variates are produced by hand rather than via
// <random> distributions, whose output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>

namespace abc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t replica = 0) {
    const std::uint64_t s = splitmix64(seed ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
    return Rng(seq);
}

/// Uniform on (0, 1].
inline double uniform01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

/// Strictly positive exponential variate.
inline double exponential(Rng& rng, double rate) { return -std::log(uniform_open(rng)) / rate; }

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    // Lemire's rejection-free-in-practice method.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        const unsigned __int128 m = static_cast<unsigned __int128>(r) * n;
        if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace abc

#pragma once

#include <cstdint>
#include <random>

namespace mesh {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Generator for substream `stream` of master seed `seed`. Deterministic and
/// independent of how many threads consume the streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(mix_seed(seed)),
                      static_cast<std::uint32_t>(mix_seed(seed) >> 32),
                      static_cast<std::uint32_t>(mix_seed(stream ^ 0x5bd1e995ULL)),
                      static_cast<std::uint32_t>(mix_seed(stream ^ 0x5bd1e995ULL) >> 32)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mesh

#pragma once

#include <cstdint>
#include <random>

namespace smwave {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

// SplitMix64 finalizer. Fixed for reproducibility of derived seeds; changing
// it changes every Monte Carlo result downstream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// replica_seed = splitmix64(splitmix64(root) ^ index). Also used to split a
// seed into independent streams for nested generators (index = stream id).
constexpr Seed derive_seed(Seed root, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(root) ^ index);
}

inline Engine make_engine(Seed seed) {
    return Engine(seed);
}

} // namespace smwave

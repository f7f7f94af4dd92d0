#pragma once

#include <cstdint>
#include <initializer_list>

namespace dualfocus {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream derivation: one independent seed per (root, counters...).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t s = mix64(root);
    for (auto c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags keep different consumers of one root seed apart.
namespace stream {
inline constexpr std::uint64_t texture = 1;
inline constexpr std::uint64_t topography = 2;
inline constexpr std::uint64_t capture = 3;
inline constexpr std::uint64_t kohler = 4;
inline constexpr std::uint64_t slide = 5;
inline constexpr std::uint64_t survey = 6;
inline constexpr std::uint64_t calibration = 7;
} // namespace stream

} // namespace dualfocus

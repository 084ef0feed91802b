#pragma once
// Counter-based random streams. Every draw is a pure function of
// (seed, stream, role, index); nothing is carried between calls.

#include <array>
#include <cstdint>

namespace cpx::rng {

using Block = std::array<std::uint32_t, 4>;

/// Philox4x32 with 10 rounds.
Block philox4x32(Block counter, std::array<std::uint32_t, 2> key);

/// Matrix roles used to separate independent streams for one client.
enum class Role : std::uint32_t { matrix = 0, target = 1, noise = 2, misc = 3 };

/// Uniform double in the open interval (0, 1), 53 random bits.
double uniform(std::uint64_t seed, std::uint32_t stream, Role role, std::uint64_t index, int which = 0);

/// Standard normal via Box-Muller (cosine branch) on one Philox block.
double normal(std::uint64_t seed, std::uint32_t stream, Role role, std::uint64_t index);

}  // namespace cpx::rng

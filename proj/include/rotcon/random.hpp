#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rotcon {

using Rng = std::mt19937_64;

/// Identifies the generator scheme in reports.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64 substreams keyed by splitmix64(seed, stream, block)";

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for (seed, stream, block). Results depend only on
/// the triple, never on which worker draws from it.
Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t block = 0);

}  // namespace rotcon

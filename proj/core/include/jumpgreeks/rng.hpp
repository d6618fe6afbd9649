#pragma once

#include <cstdint>
#include <random>

namespace jumpgreeks {

/// Engine used for every per-path substream.
using Stream = std::mt19937_64;

/// Mixes (seed, index) into a 64-bit seed with two SplitMix64 rounds.
/// Distinct indices give statistically independent substreams and the
/// mapping never depends on how paths are distributed over workers.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Deterministic substream for path `index` of a run seeded with `seed`.
Stream make_stream(std::uint64_t seed, std::uint64_t index);

} // namespace jumpgreeks

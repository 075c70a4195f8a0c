#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spar {

using Rng = std::mt19937_64;

// Purpose tags for independent substreams derived from one master seed.
enum class Stream : std::uint32_t {
  row_split = 1,
  goal_dims = 2,
  screening = 3,
  projection = 4,
  folds = 5,
  synthetic = 6,
  holdout = 7,
};

/// Substream for (master seed, purpose, index). Streams never depend on
/// dispatch order, so every model draws the same numbers whether it runs on
/// one worker or many.
inline Rng make_stream(std::uint64_t master_seed, Stream purpose, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// Uniform on the open interval (0, 1).
inline double open_unit(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace spar

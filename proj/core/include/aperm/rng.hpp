#pragma once

#include <cstdint>
#include <random>

namespace aperm {

/// Independent sub-stream families. Keeping consumers on separate families
/// means that, for one seed, calibration draws never replay the Monte-Carlo
/// draws and neither replays the data generator.
enum class Stream : std::uint64_t {
  monte_carlo = 1,
  calibration = 2,
  data = 3,
  partition = 4,
};

/// Counter-based seed derivation: (seed, stream, index) -> 64-bit key.
/// Draw i of any loop gets its own generator, so results do not depend on
/// how indices are split across workers.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                        std::uint64_t index) noexcept;

[[nodiscard]] std::mt19937_64 substream(std::uint64_t seed, Stream stream,
                                        std::uint64_t index);

/// Seed used when the caller supplies none: $APERM_SEED if set, else 20200101.
[[nodiscard]] std::uint64_t default_seed();

}  // namespace aperm

#include "aperm/rng.hpp"

#include <cstdlib>
#include <string>

#include "aperm/errors.hpp"

namespace aperm {

namespace {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ static_cast<std::uint64_t>(stream));
  return mix64(key ^ mix64(index + 0x632be59bd9b4e019ULL));
}

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return std::mt19937_64{derive_seed(seed, stream, index)};
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("APERM_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw ParseError(std::string("APERM_SEED is not an unsigned integer: ") + env);
  }
  return 20200101ULL;
}

}  // namespace aperm

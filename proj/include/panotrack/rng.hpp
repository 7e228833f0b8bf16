#pragma once

#include <cstdint>
#include <random>

namespace panotrack {

// splitmix64 finalizer. Spreads structured (seed, frame, stream) triples into
// well-separated generator seeds so every frame and consumer draws from an
// independent, reproducible stream.
inline std::uint64_t mix_seed(std::uint64_t v) {
  v += 0x9E3779B97F4A7C15ull;
  v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
  v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
  return v ^ (v >> 31);
}

enum class RngStream : std::uint64_t {
  kBackground = 0,
  kUavScatter = 1,
  kDetector = 2,
  kManualInit = 3,
};

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t frame, RngStream stream) {
  return std::mt19937_64(mix_seed(seed + mix_seed(frame + mix_seed(static_cast<std::uint64_t>(stream)))));
}

}  // namespace panotrack

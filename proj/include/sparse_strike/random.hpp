#pragma once

#include <cstdint>
#include <initializer_list>

namespace sparse_strike {

// SplitMix64. Used wherever a value must be reproducible bit-for-bit outside
// this library (environment dynamics, seed derivation).
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Modulo draw; the bias is irrelevant for the small bounds used here.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }
};

// Mixes a base seed with stream identifiers (episode, frame, trial, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  SplitMix64 mix(base);
  std::uint64_t out = mix.next();
  for (std::uint64_t p : parts) {
    SplitMix64 step(out ^ (p + 0x632BE59BD9B4E019ULL));
    out = step.next();
  }
  return out;
}

}  // namespace sparse_strike

#pragma once

#include <cstdint>
#include <random>

namespace lmstat {

/// Generator used everywhere randomness is consumed.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream number `index` under `master`:
///
///     stream(master, index) = mix64(mix64(master) ^ mix64(index ^ 0x632be59bd9b4e019))
///
/// Replication r of an experiment always draws from stream(master, r), so
/// results do not depend on how replications are scheduled across threads.
constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index ^ 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

inline Engine make_stream(std::uint64_t master, std::uint64_t index) {
  return Engine{derive_stream(master, index)};
}

}  // namespace lmstat

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace v2xsim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive hash of a key tuple; used to derive independent streams.
std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts);

/// Uniform double in [0, 1) from a 64-bit hash.
double unit_from_hash(std::uint64_t h);

/// Named sub-streams of one drop seed.
enum class Stream : std::uint64_t {
  kDeploy = 1,
  kShadowing = 2,
  kFading = 3,
  kDecoding = 4,
  kInterfererPrecoder = 5,
};

Rng make_rng(std::uint64_t seed, Stream stream);

}  // namespace v2xsim

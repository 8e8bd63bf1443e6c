/**
 * @file common.hpp
 * @brief Shared identifiers, error types and seeded random streams.
 */
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ahp {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A documented invariant or precondition does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared in a computed value.
class NumericError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of child stream `index` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Child stream `index` of `seed`. Streams for distinct indices are independent,
/// so per-item streams make parallel loops independent of thread count.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index) { return Rng(derive_seed(seed, index)); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace ahp

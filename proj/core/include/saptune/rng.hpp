#pragma once

#include <cstdint>
#include <random>

namespace saptune {

using Rng = std::mt19937_64;

/// Named substreams derived from one session seed.
enum class Stream : std::uint64_t {
  Problem = 1,
  Sketch = 2,
  Design = 3,
  Acquisition = 4,
  Evaluation = 5,
  Hyperparameters = 6,
  Bootstrap = 7,
  Bandit = 8,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministically derives an independent child seed from (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(base, stream, index));
}

}  // namespace saptune

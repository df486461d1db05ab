#include "saptune/rng.hpp"

namespace saptune {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) {
  std::uint64_t state = base;
  std::uint64_t h = splitmix64(state);
  state = h ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL);
  h = splitmix64(state);
  state = h ^ (index * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(state);
}

}  // namespace saptune

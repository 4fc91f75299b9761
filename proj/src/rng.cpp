#include "adoptnet/rng.hpp"

namespace adoptnet {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream + 0xD1B54A32D192ED03ULL;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix(seed, stream)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1u;
  const auto wide = static_cast<unsigned __int128>(engine_()) * span;
  return lo + static_cast<std::int64_t>(wide >> 64);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(seed_, stream_ * 0x100000001B3ULL ^ (stream + 1));
}

}  // namespace adoptnet

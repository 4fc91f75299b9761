#pragma once

#include <cstdint>
#include <random>

namespace adoptnet {

/// Deterministic, splittable random source. Every random quantity in the
/// toolkit is derived from a scenario seed through named substreams so that
/// identical seeds reproduce identical runs bit for bit, independently of
/// call interleaving elsewhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform double in [0, 1). Uses the top 53 bits of the engine output so
  /// the mapping is identical on every platform.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], bounds inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Independent deterministic substream; forking commutes with draws on the
  /// parent.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace adoptnet

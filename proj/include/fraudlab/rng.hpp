#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace fraudlab {

// SplitMix64 finalizer. A bijection on 64-bit words, so distinct inputs
// always give distinct outputs.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex16(std::uint64_t value);

// xoshiro256** generator keyed by (seed, stream). Each simulator
// block and each tree owns its own stream so that adding or removing one
// consumer never shifts the numbers another consumer sees. All derived
// distributions are implemented here rather than taken from <random>, whose
// distributions are implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() noexcept;

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  // Uniform on (0, 1).
  double uniform_open() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept;  // [lo, hi)
  bool bernoulli(double p) noexcept { return uniform() < p; }
  double normal(double mean, double stddev) noexcept;
  // Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights) noexcept;

  // Derives an independent child stream.
  Rng fork(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t s_[4];
};

}  // namespace fraudlab

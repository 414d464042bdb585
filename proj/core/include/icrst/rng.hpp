#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace icrst {

/// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Single deterministic stream. Draw helpers avoid the implementation-defined
/// std distributions where bit-stable sequences matter (uniform doubles,
/// bounded integers, Bernoulli flags).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p);
  /// Standard normal (Box-Muller, one value per call).
  double normal();

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace icrst

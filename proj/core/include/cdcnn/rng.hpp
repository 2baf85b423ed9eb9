#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace cdcnn {

// xoshiro256** seeded through splitmix64.
//
// Every draw is defined in terms of 64-bit integer arithmetic, so uniform
// floats, bounded integers and permutations are bit-identical on every
// platform. Normal draws go through Box-Muller and additionally rely on the
// host libm's log/cos/sqrt.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  // Uniform in [0, 1) with 24 bits of resolution.
  float uniform() noexcept;
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform_double() noexcept;
  float uniform(float lo, float hi) noexcept { return lo + (hi - lo) * uniform(); }
  float normal() noexcept;
  // Unbiased integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Deterministic child seed for an independent stream, e.g. one per
  // (channel, repeat) pair. Depends only on the parent seed and the keys.
  static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_normal_ = false;
  float spare_normal_ = 0.0f;
};

// Uniform permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> rng_permutation(Rng& rng, std::size_t n);

}  // namespace cdcnn

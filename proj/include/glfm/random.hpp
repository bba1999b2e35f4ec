#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>

namespace glfm {

// xoshiro256** seeded through splitmix64. Satisfies
// UniformRandomBitGenerator so std distributions can draw from it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos();
  double normal();
  double exponential();

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Independent child seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Draw from N(mean, std^2) restricted to (lo, hi]. Bounds may be infinite.
double trunc_normal_sample(Rng& rng, double mean, double std, double lo, double hi);

std::uint64_t poisson_sample(Rng& rng, double lambda);

// v with 1/v ~ Gamma(shape, rate).
double inverse_gamma_sample(Rng& rng, double shape, double rate);

}  // namespace glfm

#include "glfm/random.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace glfm {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Standard normal restricted to [a, b] with 0 <= a < b (b may be +inf).
double tail_sample(Rng& rng, double a, double b) {
  const double root = std::sqrt(a * a + 4.0);
  const double rate = 0.5 * (a + root);
  // Exponential proposals win over uniform ones unless the interval is short.
  const double cutoff = a + (2.0 / (a + root)) * std::exp(0.25 * (a * a - a * root) + 0.5);
  if (b > cutoff) {
    while (true) {
      const double z = a + rng.exponential() / rate;
      if (z > b) continue;
      const double diff = z - rate;
      if (rng.uniform() <= std::exp(-0.5 * diff * diff)) return z;
    }
  }
  while (true) {
    const double z = a + (b - a) * rng.uniform();
    if (rng.uniform() <= std::exp(0.5 * (a * a - z * z))) return z;
  }
}

// Standard normal restricted to [a, b] with a < 0 < b.
double central_sample(Rng& rng, double a, double b) {
  if (b - a >= std::sqrt(2.0 * std::numbers::pi)) {
    while (true) {
      const double z = rng.normal();
      if (z >= a && z <= b) return z;
    }
  }
  while (true) {
    const double z = a + (b - a) * rng.uniform();
    if (rng.uniform() <= std::exp(-0.5 * z * z)) return z;
  }
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller, one variate per call so the generator state is the only state.
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential() { return -std::log(uniform_pos()); }

std::string Rng::serialize() const {
  std::ostringstream out;
  out << s_[0] << ' ' << s_[1] << ' ' << s_[2] << ' ' << s_[3];
  return out.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  for (auto& word : rng.s_) {
    if (!(in >> word)) throw std::invalid_argument("malformed generator state");
  }
  return rng;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t x = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
  splitmix64(x);
  return splitmix64(x);
}

double trunc_normal_sample(Rng& rng, double mean, double std, double lo, double hi) {
  if (!(std > 0.0)) throw std::invalid_argument("truncated normal needs std > 0");
  if (!(lo < hi)) throw std::invalid_argument("truncated normal needs lo < hi");
  const double a = (lo - mean) / std;
  const double b = (hi - mean) / std;

  double z;
  if (std::isinf(a) && std::isinf(b)) {
    z = rng.normal();
  } else if (a >= 0.0) {
    z = tail_sample(rng, a, b);
  } else if (b <= 0.0) {
    z = -tail_sample(rng, -b, -a);
  } else {
    z = central_sample(rng, a, b);
  }

  double s = mean + std * z;
  if (s <= lo) s = std::nextafter(lo, hi);
  if (s > hi) s = hi;
  return s;
}

std::uint64_t poisson_sample(Rng& rng, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("Poisson mean must be nonnegative");
  if (lambda == 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(lambda);
  return dist(rng);
}

double inverse_gamma_sample(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("inverse-gamma parameters must be positive");
  }
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  double g = gamma(rng);
  while (!(g > 0.0)) g = gamma(rng);
  return 1.0 / g;
}

}  // namespace glfm

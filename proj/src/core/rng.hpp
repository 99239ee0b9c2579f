#pragma once

#include <cstdint>
#include <random>

#include "core/types.hpp"

namespace fc {

// splitmix64 step; used to derive independent child seeds so that every
// randomized stage consumes its own stream and stays reproducible when other
// stages change their draw counts.
std::uint64_t seed_mix(std::uint64_t state);

// Child seed for a named stage. Tags are small fixed constants per call site.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic sampler. All distributions are implemented explicitly (not via
// std:: distribution objects) so the stream is pinned by this code alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0,1). 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; second value cached.
  double normal();

  // Gamma(shape, 1) by Marsaglia-Tsang, with the usual boost for shape < 1.
  double gamma(double shape);
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Isotropic unit vector in R^d.
  Vec unit_vector(int d);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace fc

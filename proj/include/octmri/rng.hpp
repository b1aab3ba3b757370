#ifndef OCTMRI_RNG_HPP_
#define OCTMRI_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace octmri {

// Deterministic RNG wrapper. Variates are derived from raw mt19937_64 output
// so streams are reproducible independent of standard-library distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0,1)
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  // Rayleigh(sigma): rho = sigma * sqrt(-2 ln(1-u))
  double rayleigh(double sigma) {
    double u = uniform01();
    return sigma * std::sqrt(-2.0 * std::log1p(-u));
  }

  // standard Gumbel variate, for weighted sampling without replacement
  double gumbel() {
    double u = uniform01();
    // keep away from 0 exactly
    if (u <= 0.0) u = 0x1.0p-53;
    return -std::log(-std::log(u));
  }

  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace octmri

#endif  // OCTMRI_RNG_HPP_

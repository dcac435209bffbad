#ifndef SSMCMC_RNG_HPP
#define SSMCMC_RNG_HPP

#include <cstdint>
#include <random>

namespace ssmcmc {

// Seedable generator with deterministic stream splitting. Child streams are
// derived from the parent seed through the splitmix64 finalizer, so a run is
// fully determined by one master seed regardless of how work is partitioned.
class Rng {
 public:
  static constexpr const char* kAlgorithmId = "mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream; `stream` keys the split (0, 1, ... by caller).
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  double normal() { return std::normal_distribution<double>()(gen_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double uniform() { return std::uniform_real_distribution<double>()(gen_); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  // Gamma(shape, scale); mean = shape * scale.
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(gen_);
  }

  // InverseGamma(shape, scale): 1/X ~ Gamma(shape, 1/scale).
  double inverse_gamma(double shape, double scale) {
    return 1.0 / std::gamma_distribution<double>(shape, 1.0 / scale)(gen_);
  }

  std::uint64_t next_u64() { return gen_(); }

  // index in [0, n)
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace ssmcmc

#endif

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace abs_lab {

/// Seeded random stream. Every stochastic component owns one so runs are
/// reproducible from a single scenario seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Deterministic per-component seed derived from a scenario seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Systematic resampling: one uniform offset shared by all strata.
std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t count, Rng& rng);

/// Stratified resampling: an independent uniform draw inside each stratum.
std::vector<std::size_t> stratified_resample(std::span<const double> weights, std::size_t count, Rng& rng);

}  // namespace abs_lab

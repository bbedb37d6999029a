#include "abs_lab/resampling.hpp"

#include <stdexcept>

namespace abs_lab {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

template <typename PointFn>
std::vector<std::size_t> inverse_cdf(std::span<const double> weights, std::size_t count, PointFn point) {
  if (weights.empty()) throw std::invalid_argument("cannot resample an empty ensemble");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("cannot resample with zero total weight");

  std::vector<std::size_t> out;
  out.reserve(count);
  std::size_t i = 0;
  double cumulative = weights[0] / total;
  for (std::size_t s = 0; s < count; ++s) {
    const double u = point(s);
    while ((u > cumulative || weights[i] <= 0.0) && i + 1 < weights.size()) {
      ++i;
      cumulative += weights[i] / total;
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t count, Rng& rng) {
  const double step = 1.0 / static_cast<double>(count);
  const double offset = rng.uniform() * step;
  return inverse_cdf(weights, count, [&](std::size_t s) { return offset + step * static_cast<double>(s); });
}

std::vector<std::size_t> stratified_resample(std::span<const double> weights, std::size_t count, Rng& rng) {
  const double step = 1.0 / static_cast<double>(count);
  return inverse_cdf(weights, count,
                     [&](std::size_t s) { return step * (static_cast<double>(s) + rng.uniform()); });
}

}  // namespace abs_lab

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abs_lab/estimator.hpp"

namespace abs_lab {

/// Admissible torque increments per control step and the actuator range of
/// each front brake.
struct ActionSet {
  std::vector<double> increments{-400.0, -200.0, -50.0, 0.0, 50.0, 200.0, 400.0};
  double torque_min = -4000.0;
  double torque_max = 0.0;

  double apply(double previous, double increment) const;
  /// Requires the hold action and a non-empty torque range.
  void validate() const;
};

/// One predicted observation: the tyre force expected after applying a
/// candidate torque, and the peak force the same particle believes in.
struct PredictedForceSample {
  double force = 0.0;
  double peak_force = 0.0;
  double weight = 0.0;
};

struct CostTerms {
  double value = 0.0;       // |mean error| + variance
  double mean_error = 0.0;  // weighted mean of force - peak force
  double variance = 0.0;    // weighted variance of force - peak force
};

/// Dual-control cost of a predicted observation set. Needs at least two samples.
CostTerms cost(std::span<const PredictedForceSample> samples);

/// How the predicted tracking-error variance is formed from the force samples.
/// `marginal` weights each sample by its kernel density among the predicted
/// observations and takes one weighted variance. `posterior` treats every
/// sample as a hypothetical next observation, conditions the sample set on it
/// and averages the resulting posterior means and variances.
enum class UncertaintyModel { marginal, posterior };

/// Expected posterior cost: conditions `samples` on each sample's force as a
/// hypothetical observation with Gaussian noise `force_sigma`.
CostTerms expected_posterior_cost(std::span<const PredictedForceSample> samples, double force_sigma);

struct DceeConfig {
  ActionSet actions;
  std::size_t predicted_observations = 40;
  /// Standard deviation of the Gaussian force observation model, N.
  double force_sigma = 250.0;
  /// Below this estimated speed the last torque is held.
  double hold_speed = 1.5;
  UncertaintyModel uncertainty = UncertaintyModel::marginal;
};

/// Predicted forces of the particles `subset` under the per-wheel front
/// torque `torque`. Weights come from the Gaussian force observation model
/// evaluated against the predicted observation set itself.
std::vector<PredictedForceSample> predict_forces(const ParticleEnsemble& ens, std::span<const std::size_t> subset,
                                                 double torque, double dt, const VehicleParams& params,
                                                 double front_load, double force_sigma);

struct Decision {
  double torque = 0.0;
  double increment = 0.0;
  CostTerms chosen;
  /// Largest tracking-error variance over all candidates.
  double max_variance = 0.0;
  std::vector<double> candidate_costs;
  double front_load = 0.0;
  bool held = false;
};

class DceeController {
 public:
  DceeController(DceeConfig config, VehicleParams params, double dt, std::uint64_t seed);

  /// Evaluates every increment and returns the cheapest. Never modifies `ens`.
  Decision select_action(const ParticleEnsemble& ens, double previous_torque);

  const DceeConfig& config() const { return config_; }

 private:
  DceeConfig config_;
  VehicleParams params_;
  double dt_;
  Rng rng_;
};

}  // namespace abs_lab

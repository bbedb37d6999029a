#include "abs_lab/dcee.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abs_lab {

double ActionSet::apply(double previous, double increment) const {
  return std::clamp(previous + increment, torque_min, torque_max);
}

void ActionSet::validate() const {
  if (std::find(increments.begin(), increments.end(), 0.0) == increments.end()) {
    throw std::invalid_argument("action set must contain the hold action 0");
  }
  if (!(torque_min < torque_max)) throw std::invalid_argument("empty torque range");
}

CostTerms cost(std::span<const PredictedForceSample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("cost needs at least two predicted observations");
  double total = 0.0;
  double mean = 0.0;
  for (const auto& s : samples) {
    total += s.weight;
    mean += s.weight * (s.force - s.peak_force);
  }
  mean /= total;
  double var = 0.0;
  for (const auto& s : samples) {
    const double d = (s.force - s.peak_force) - mean;
    var += s.weight * d * d;
  }
  var /= total;
  return {std::abs(mean) + var, mean, var};
}

CostTerms expected_posterior_cost(std::span<const PredictedForceSample> samples, double force_sigma) {
  if (samples.size() < 2) throw std::invalid_argument("cost needs at least two predicted observations");
  const double inv_two_var = 1.0 / (2.0 * force_sigma * force_sigma);
  std::vector<PredictedForceSample> posterior(samples.begin(), samples.end());
  double prior_total = 0.0;
  for (const auto& s : samples) prior_total += s.weight;
  double mean = 0.0;
  double var = 0.0;
  for (const auto& y : samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = samples[i].force - y.force;
      posterior[i].weight = samples[i].weight * std::exp(-d * d * inv_two_var);
    }
    const CostTerms c = cost(posterior);
    mean += y.weight * c.mean_error;
    var += y.weight * c.variance;
  }
  mean /= prior_total;
  var /= prior_total;
  return {std::abs(mean) + var, mean, var};
}

std::vector<PredictedForceSample> predict_forces(const ParticleEnsemble& ens, std::span<const std::size_t> subset,
                                                 double torque, double dt, const VehicleParams& params,
                                                 double front_load, double force_sigma) {
  std::vector<PredictedForceSample> out(subset.size());
  const double R = params.rolling_radius;
  for (std::size_t j = 0; j < subset.size(); ++j) {
    const AugmentedState& chi = ens.particles[subset[j]];
    const auto step = advance(chi, torque, dt, params);
    double kappa = 0.0;
    if (step.next.U > 0.0) {
      // Past lock the unclamped speed keeps actions distinguishable.
      kappa = (step.omega_front_unclamped * R - step.next.U) / step.next.U;
    } else if (chi.U > 0.0) {
      // A particle that stops within the step keeps the slip it had.
      kappa = (chi.omega_front * R - chi.U) / chi.U;
    }
    out[j].force = friction(kappa, chi.theta) * front_load;
    out[j].peak_force = -chi.theta.D * front_load;
  }

  // Kernel density of each prediction among the predicted observation set.
  const double inv_two_var = 1.0 / (2.0 * force_sigma * force_sigma);
  double total = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    double density = 0.0;
    for (std::size_t l = 0; l < out.size(); ++l) {
      const double d = out[j].force - out[l].force;
      density += std::exp(-d * d * inv_two_var);
    }
    out[j].weight = density;
    total += density;
  }
  for (auto& s : out) s.weight /= total;
  return out;
}

DceeController::DceeController(DceeConfig config, VehicleParams params, double dt, std::uint64_t seed)
    : config_(std::move(config)), params_(params), dt_(dt), rng_(seed) {
  config_.actions.validate();
  if (config_.predicted_observations < 2) throw std::invalid_argument("need at least two predicted observations");
  if (!(config_.force_sigma > 0.0)) throw std::invalid_argument("force sigma must be positive");
}

Decision DceeController::select_action(const ParticleEnsemble& ens, double previous_torque) {
  const auto subset = stratified_resample(ens.weights, config_.predicted_observations, rng_);

  // Weight transfer from the deceleration the posterior expects under the
  // torque currently applied.
  double accel = 0.0;
  for (std::size_t idx : subset) accel += advance(ens.particles[idx], previous_torque, dt_, params_).accel;
  accel /= static_cast<double>(subset.size());

  Decision best;
  best.front_load = vertical_loads(accel, params_).front;
  bool have_best = false;
  CostTerms hold;
  for (double tau : config_.actions.increments) {
    const double torque = config_.actions.apply(previous_torque, tau);
    const auto samples = predict_forces(ens, subset, torque, dt_, params_, best.front_load, config_.force_sigma);
    CostTerms c;
    if (config_.uncertainty == UncertaintyModel::posterior) {
      // The subset is already drawn by posterior weight, so it carries equal
      // prior mass.
      auto equal = samples;
      for (auto& e : equal) e.weight = 1.0 / static_cast<double>(equal.size());
      c = expected_posterior_cost(equal, config_.force_sigma);
    } else {
      c = cost(samples);
    }
    if (tau == 0.0) hold = c;
    best.candidate_costs.push_back(c.value);
    best.max_variance = std::max(best.max_variance, c.variance);

    bool better = !have_best || c.value < best.chosen.value;
    if (have_best && c.value == best.chosen.value) {
      // Ties: smallest |tau|, then the most negative tau.
      const double a = std::abs(tau);
      const double b = std::abs(best.increment);
      better = a < b || (a == b && tau < best.increment);
    }
    if (better) {
      best.chosen = c;
      best.increment = tau;
      best.torque = torque;
      have_best = true;
    }
  }

  if (posterior_mean(ens).U < config_.hold_speed) {
    best.held = true;
    best.chosen = hold;
    best.increment = 0.0;
    best.torque = previous_torque;
  }
  return best;
}

}  // namespace abs_lab

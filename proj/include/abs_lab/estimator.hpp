#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "abs_lab/estimation_model.hpp"
#include "abs_lab/resampling.hpp"
#include "abs_lab/vehicle.hpp"

namespace abs_lab {

using StateMatrix = Eigen::Matrix<double, AugmentedState::kSize, AugmentedState::kSize>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Initial particle distribution: uniform boxes around the first sensor
/// reading for the vehicle states, and boxes that cover every road surface
/// for the tyre coefficients.
struct PriorSpec {
  Interval B{4.0, 21.0};
  Interval C{1.2601, 1.601};
  Interval D{0.2, 1.6};
  Interval E{-12.0, 2.0};
  double speed = 0.0;
  double omega_front = 0.0;
  double omega_rear = 0.0;
  double speed_halfwidth = 2.0;
  double omega_halfwidth = 3.5;
  std::size_t count = 1000;
  /// Threshold of the uncertainty-triggered reset; set once the controller
  /// has evaluated the initial ensemble.
  double initial_uncertainty = 0.0;

  static PriorSpec around(const Measurement& first, std::size_t count);
  /// Throws std::invalid_argument for degenerate boxes or fewer than two particles.
  void validate() const;
  MagicParams draw_theta(Rng& rng) const;
};

/// Diagonal sensor covariance of [U, omega_front, omega_rear].
struct MeasurementNoise {
  std::array<double, 3> variance{0.2, 0.5, 0.5};
};

/// Weighted particle approximation of the posterior. Weights are kept
/// normalised.
struct ParticleEnsemble {
  std::vector<AugmentedState> particles;
  std::vector<double> weights;
  Rng rng;

  std::size_t size() const { return particles.size(); }
};

enum class ResamplingScheme { systematic, stratified };

struct FilterOptions {
  ResamplingScheme scheme = ResamplingScheme::systematic;
  bool regularize = true;
  bool mcmc = true;
  /// Lower bound applied to the peak factor after jitter.
  double peak_floor = 0.01;
  /// Reflect jittered tyre coefficients back into the prior box. Off lets
  /// them wander; only the peak floor applies.
  bool confine_theta = true;
  /// Floor on the kernel's tyre-coefficient spread, as a fraction of each
  /// prior box width. Keeps a collapsed cloud able to move again.
  double theta_spread_floor = 0.01;
  /// Per-step Gaussian process noise on [U, omega_front, omega_rear]. The
  /// tyre parameters get none. Zero gives a purely deterministic transition.
  std::array<double, 3> state_noise_std{0.002, 0.1, 0.1};
};

ParticleEnsemble initialize(const PriorSpec& prior, std::uint64_t seed);

/// Gaussian log-likelihood of `y` given a particle, up to a constant.
double log_likelihood(const Measurement& y, const AugmentedState& chi, const MeasurementNoise& noise);

struct WeightUpdate {
  /// Every likelihood underflowed; weights were reset to uniform.
  bool underflow = false;
  double max_log_likelihood = 0.0;
};

/// Bootstrap step: propagate every particle through the model under the
/// applied torque, then multiply the weights by the measurement likelihood.
WeightUpdate propagate_and_weight(ParticleEnsemble& ens, double front_torque, const Measurement& y, double dt,
                                  const VehicleParams& params, const MeasurementNoise& noise);

/// Adds independent Gaussian noise to the state part of every particle.
void add_state_noise(ParticleEnsemble& ens, const std::array<double, 3>& std_dev);

/// Reweights in place by the likelihood of `y` without propagating.
WeightUpdate reweight(ParticleEnsemble& ens, const Measurement& y, const MeasurementNoise& noise);

double effective_sample_size(const ParticleEnsemble& ens);
double effective_sample_size(const std::vector<double>& weights);

/// Resampling threshold fraction as a linear function of the expected peak factor.
double resampling_gain(double expected_peak);
double resampling_gain(const ParticleEnsemble& ens);

AugmentedState posterior_mean(const ParticleEnsemble& ens);

/// Weighted covariance with the n/(n-1) small-sample correction.
StateMatrix weighted_covariance(const ParticleEnsemble& ens);

double bandwidth_constant(std::size_t state_dim);
double optimal_bandwidth(std::size_t state_dim, std::size_t particle_count);

struct RegularizeResult {
  bool applied = false;
  bool jitter_added = false;
};

/// Gaussian-kernel jitter scaled by the Cholesky factor of `covariance`.
/// With `support` and `options.confine_theta`, tyre coefficients are
/// reflected back into the box.
RegularizeResult regularize(ParticleEnsemble& ens, const StateMatrix& covariance, const FilterOptions& options = {},
                            const PriorSpec* support = nullptr);
/// Uses the ensemble's own weighted covariance.
RegularizeResult regularize(ParticleEnsemble& ens, const FilterOptions& options = {},
                            const PriorSpec* support = nullptr);

/// Metropolis-Hastings accept/reject of every jittered particle against the
/// particle it was jittered from. Returns the acceptance rate.
double mcmc_move(ParticleEnsemble& ens, const std::vector<AugmentedState>& before, const Measurement& y,
                 const MeasurementNoise& noise);

struct ResampleReport {
  double n_eff = 0.0;
  double gain = 0.0;
  bool resampled = false;
  bool regularized = false;
  double acceptance = 0.0;
};

/// Resamples, regularises and applies the MCMC move when the effective
/// sample size drops to `gain * n` or below.
ResampleReport maybe_resample(ParticleEnsemble& ens, const Measurement& y, const MeasurementNoise& noise,
                              const FilterOptions& options = {}, const PriorSpec* support = nullptr);

/// Redraws every particle's tyre coefficients from the prior and resets the
/// weights when `predicted_uncertainty >= prior.initial_uncertainty`.
/// Vehicle states are left untouched. Returns whether the reset fired.
bool retrogressive_resample(ParticleEnsemble& ens, double predicted_uncertainty, const PriorSpec& prior);

/// One filter cycle (propagate, weight, conditional resample) on an owned
/// ensemble.
class ParticleFilter {
 public:
  struct StepReport {
    WeightUpdate weights;
    ResampleReport resample;
  };

  ParticleFilter(PriorSpec prior, std::uint64_t seed, VehicleParams params, MeasurementNoise noise,
                 FilterOptions options = {});

  StepReport update(double front_torque, const Measurement& y, double dt);
  bool retrogressive(double predicted_uncertainty);

  const ParticleEnsemble& ensemble() const { return ensemble_; }
  ParticleEnsemble& ensemble() { return ensemble_; }
  PriorSpec& prior() { return prior_; }
  const PriorSpec& prior() const { return prior_; }
  AugmentedState mean() const { return posterior_mean(ensemble_); }

 private:
  PriorSpec prior_;
  VehicleParams params_;
  MeasurementNoise noise_;
  FilterOptions options_;
  ParticleEnsemble ensemble_;
};

}  // namespace abs_lab

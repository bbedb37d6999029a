#include "abs_lab/estimator.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace abs_lab {

namespace {

constexpr std::size_t kDim = AugmentedState::kSize;
// Natural log of the smallest normal double: below this a likelihood is 0.
const double kLogUnderflow = std::log(std::numeric_limits<double>::min());

void normalize(std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
}

void make_uniform(std::vector<double>& w) {
  std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
}

// Multiplies weights by exp(loglik) in the log domain.
WeightUpdate apply_likelihoods(ParticleEnsemble& ens, const std::vector<double>& loglik) {
  WeightUpdate out;
  out.max_log_likelihood = -std::numeric_limits<double>::infinity();
  for (double l : loglik) out.max_log_likelihood = std::max(out.max_log_likelihood, l);
  if (!(out.max_log_likelihood > kLogUnderflow)) {
    out.underflow = true;
    make_uniform(ens.weights);
    return out;
  }
  std::vector<double> logw(ens.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    logw[i] = ens.weights[i] > 0.0 ? std::log(ens.weights[i]) + loglik[i]
                                   : -std::numeric_limits<double>::infinity();
    top = std::max(top, logw[i]);
  }
  if (!std::isfinite(top)) {
    out.underflow = true;
    make_uniform(ens.weights);
    return out;
  }
  for (std::size_t i = 0; i < ens.size(); ++i) ens.weights[i] = std::exp(logw[i] - top);
  normalize(ens.weights);
  return out;
}

}  // namespace

PriorSpec PriorSpec::around(const Measurement& first, std::size_t count) {
  PriorSpec p;
  p.speed = first.U;
  p.omega_front = first.omega_front;
  p.omega_rear = first.omega_rear;
  p.count = count;
  return p;
}

void PriorSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid prior: ") + what);
  };
  require(count >= 2, "need at least two particles");
  require(B.width() > 0.0 && C.width() > 0.0 && D.width() > 0.0 && E.width() > 0.0, "degenerate parameter box");
  require(speed_halfwidth > 0.0 && omega_halfwidth > 0.0, "degenerate state box");
}

MagicParams PriorSpec::draw_theta(Rng& rng) const {
  MagicParams t;
  t.B = rng.uniform(B.lo, B.hi);
  t.C = rng.uniform(C.lo, C.hi);
  t.D = rng.uniform(D.lo, D.hi);
  t.E = rng.uniform(E.lo, E.hi);
  return t;
}

ParticleEnsemble initialize(const PriorSpec& prior, std::uint64_t seed) {
  prior.validate();
  ParticleEnsemble ens;
  ens.rng = Rng(seed);
  ens.particles.resize(prior.count);
  for (auto& p : ens.particles) {
    p.U = ens.rng.uniform(prior.speed - prior.speed_halfwidth, prior.speed + prior.speed_halfwidth);
    p.omega_front = ens.rng.uniform(prior.omega_front - prior.omega_halfwidth, prior.omega_front + prior.omega_halfwidth);
    p.omega_rear = ens.rng.uniform(prior.omega_rear - prior.omega_halfwidth, prior.omega_rear + prior.omega_halfwidth);
    p.U = std::max(p.U, 0.0);
    p.omega_front = std::max(p.omega_front, 0.0);
    p.omega_rear = std::max(p.omega_rear, 0.0);
    p.theta = prior.draw_theta(ens.rng);
  }
  ens.weights.assign(prior.count, 1.0 / static_cast<double>(prior.count));
  return ens;
}

double log_likelihood(const Measurement& y, const AugmentedState& chi, const MeasurementNoise& noise) {
  const double du = y.U - chi.U;
  const double df = y.omega_front - chi.omega_front;
  const double dr = y.omega_rear - chi.omega_rear;
  return -0.5 * (du * du / noise.variance[0] + df * df / noise.variance[1] + dr * dr / noise.variance[2]);
}

WeightUpdate propagate_and_weight(ParticleEnsemble& ens, double front_torque, const Measurement& y, double dt,
                                  const VehicleParams& params, const MeasurementNoise& noise) {
  for (auto& p : ens.particles) p = predict_state(p, front_torque, dt, params);
  return reweight(ens, y, noise);
}

void add_state_noise(ParticleEnsemble& ens, const std::array<double, 3>& std_dev) {
  if (std_dev[0] <= 0.0 && std_dev[1] <= 0.0 && std_dev[2] <= 0.0) return;
  for (auto& p : ens.particles) {
    p.U += std_dev[0] * ens.rng.normal();
    p.omega_front = std::max(0.0, p.omega_front + std_dev[1] * ens.rng.normal());
    p.omega_rear = std::max(0.0, p.omega_rear + std_dev[2] * ens.rng.normal());
  }
}

WeightUpdate reweight(ParticleEnsemble& ens, const Measurement& y, const MeasurementNoise& noise) {
  std::vector<double> loglik(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) loglik[i] = log_likelihood(y, ens.particles[i], noise);
  return apply_likelihoods(ens, loglik);
}

double effective_sample_size(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double sq = 0.0;
  for (double w : weights) sq += (w / total) * (w / total);
  return 1.0 / sq;
}

double effective_sample_size(const ParticleEnsemble& ens) { return effective_sample_size(ens.weights); }

double resampling_gain(double expected_peak) { return -3.0 / 20.0 * expected_peak + 0.295; }

double resampling_gain(const ParticleEnsemble& ens) { return resampling_gain(posterior_mean(ens).theta.D); }

AugmentedState posterior_mean(const ParticleEnsemble& ens) {
  std::array<double, kDim> acc{};
  double total = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto v = ens.particles[i].to_array();
    const double w = ens.weights[i];
    total += w;
    for (std::size_t d = 0; d < kDim; ++d) acc[d] += w * v[d];
  }
  for (double& a : acc) a /= total;
  return AugmentedState::from_array(acc);
}

StateMatrix weighted_covariance(const ParticleEnsemble& ens) {
  const auto mean_arr = posterior_mean(ens).to_array();
  const Eigen::Map<const Eigen::Matrix<double, kDim, 1>> mean(mean_arr.data());
  StateMatrix s = StateMatrix::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto v = ens.particles[i].to_array();
    const Eigen::Matrix<double, kDim, 1> dev = Eigen::Map<const Eigen::Matrix<double, kDim, 1>>(v.data()) - mean;
    s.noalias() += ens.weights[i] * dev * dev.transpose();
    total += ens.weights[i];
  }
  const double n = static_cast<double>(ens.size());
  return (n / (n - 1.0)) * s / total;
}

double bandwidth_constant(std::size_t state_dim) {
  const double nx = static_cast<double>(state_dim);
  return std::pow(4.0 / (nx + 2.0), 1.0 / (nx + 4.0));
}

double optimal_bandwidth(std::size_t state_dim, std::size_t particle_count) {
  const double nx = static_cast<double>(state_dim);
  return bandwidth_constant(state_dim) * std::pow(static_cast<double>(particle_count), -1.0 / (nx + 4.0));
}

namespace {

// Folds x back into [lo, hi] as if the interval walls were mirrors.
double reflect(double x, const Interval& box) {
  const double w = box.width();
  double r = std::fmod(x - box.lo, 2.0 * w);
  if (r < 0.0) r += 2.0 * w;
  return box.lo + (r <= w ? r : 2.0 * w - r);
}

}  // namespace

RegularizeResult regularize(ParticleEnsemble& ens, const StateMatrix& covariance, const FilterOptions& options,
                            const PriorSpec* support) {
  RegularizeResult out;
  StateMatrix kernel = covariance;
  if (support && options.theta_spread_floor > 0.0) {
    const Interval* boxes[] = {&support->B, &support->C, &support->D, &support->E};
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double floor = std::pow(options.theta_spread_floor * boxes[i]->width(), 2);
      kernel(3 + i, 3 + i) = std::max(kernel(3 + i, 3 + i), floor);
    }
  }
  Eigen::LLT<StateMatrix> llt(kernel);
  if (llt.info() != Eigen::Success) {
    llt.compute(kernel + 1e-10 * StateMatrix::Identity());
    out.jitter_added = true;
    if (llt.info() != Eigen::Success) {
      std::clog << "regularization skipped: covariance not positive definite\n";
      return out;
    }
  }
  const StateMatrix factor = llt.matrixL();
  const double h = optimal_bandwidth(kDim, ens.size());
  Eigen::Matrix<double, kDim, 1> eps;
  for (auto& p : ens.particles) {
    for (std::size_t d = 0; d < kDim; ++d) eps[static_cast<Eigen::Index>(d)] = ens.rng.normal();
    const Eigen::Matrix<double, kDim, 1> shift = h * factor * eps;
    auto v = p.to_array();
    for (std::size_t d = 0; d < kDim; ++d) v[d] += shift[static_cast<Eigen::Index>(d)];
    p = AugmentedState::from_array(v);
    p.U = std::max(p.U, 0.0);
    p.omega_front = std::max(p.omega_front, 0.0);
    p.omega_rear = std::max(p.omega_rear, 0.0);
    p.theta.D = std::max(p.theta.D, options.peak_floor);
    if (support && options.confine_theta) {
      p.theta.B = reflect(p.theta.B, support->B);
      p.theta.C = reflect(p.theta.C, support->C);
      p.theta.D = reflect(p.theta.D, support->D);
      p.theta.E = reflect(p.theta.E, support->E);
    }
  }
  out.applied = true;
  return out;
}

RegularizeResult regularize(ParticleEnsemble& ens, const FilterOptions& options, const PriorSpec* support) {
  return regularize(ens, weighted_covariance(ens), options, support);
}

double mcmc_move(ParticleEnsemble& ens, const std::vector<AugmentedState>& before, const Measurement& y,
                 const MeasurementNoise& noise) {
  if (before.size() != ens.size()) throw std::invalid_argument("mcmc_move: ensemble size mismatch");
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double proposed = log_likelihood(y, ens.particles[i], noise);
    const double current = log_likelihood(y, before[i], noise);
    const double log_ratio = proposed - current;
    // Draw unconditionally so the stream does not depend on the outcomes.
    const double u = ens.rng.uniform();
    if (log_ratio >= 0.0 || (std::isfinite(proposed) && std::log(u) < log_ratio)) {
      ++accepted;
    } else {
      ens.particles[i] = before[i];
    }
  }
  return static_cast<double>(accepted) / static_cast<double>(ens.size());
}

ResampleReport maybe_resample(ParticleEnsemble& ens, const Measurement& y, const MeasurementNoise& noise,
                              const FilterOptions& options, const PriorSpec* support) {
  ResampleReport out;
  out.n_eff = effective_sample_size(ens);
  out.gain = resampling_gain(ens);
  const double n = static_cast<double>(ens.size());
  if (out.n_eff > out.gain * n) return out;

  // The kernel is sized by the weighted population before selection.
  const StateMatrix covariance = weighted_covariance(ens);
  const auto idx = options.scheme == ResamplingScheme::systematic
                       ? systematic_resample(ens.weights, ens.size(), ens.rng)
                       : stratified_resample(ens.weights, ens.size(), ens.rng);
  std::vector<AugmentedState> selected(ens.size());
  for (std::size_t i = 0; i < idx.size(); ++i) selected[i] = ens.particles[idx[i]];
  ens.particles = selected;
  make_uniform(ens.weights);
  out.resampled = true;

  if (options.regularize) {
    out.regularized = regularize(ens, covariance, options, support).applied;
    if (out.regularized && options.mcmc) out.acceptance = mcmc_move(ens, selected, y, noise);
  }
  return out;
}

bool retrogressive_resample(ParticleEnsemble& ens, double predicted_uncertainty, const PriorSpec& prior) {
  if (!(predicted_uncertainty >= prior.initial_uncertainty)) return false;
  for (auto& p : ens.particles) p.theta = prior.draw_theta(ens.rng);
  make_uniform(ens.weights);
  return true;
}

ParticleFilter::ParticleFilter(PriorSpec prior, std::uint64_t seed, VehicleParams params, MeasurementNoise noise,
                               FilterOptions options)
    : prior_(prior),
      params_(params),
      noise_(noise),
      options_(options),
      ensemble_(initialize(prior_, seed)) {}

ParticleFilter::StepReport ParticleFilter::update(double front_torque, const Measurement& y, double dt) {
  StepReport r;
  for (auto& p : ensemble_.particles) p = predict_state(p, front_torque, dt, params_);
  add_state_noise(ensemble_, options_.state_noise_std);
  r.weights = reweight(ensemble_, y, noise_);
  r.resample = maybe_resample(ensemble_, y, noise_, options_, &prior_);
  return r;
}

bool ParticleFilter::retrogressive(double predicted_uncertainty) {
  return retrogressive_resample(ensemble_, predicted_uncertainty, prior_);
}

}  // namespace abs_lab

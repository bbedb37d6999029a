#include "abs_lab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace abs_lab {

LowPassFilter::LowPassFilter(double cutoff_hz, double dt, double initial) : y_(initial) {
  if (!(cutoff_hz > 0.0) || !(dt > 0.0)) throw std::invalid_argument("low-pass needs positive cutoff and dt");
  alpha_ = 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz * dt);
}

double LowPassFilter::update(double x) {
  y_ += alpha_ * (x - y_);
  return y_;
}

double SlipTracker::update(double slip_target, double speed, double omega_front, double radius) {
  const double omega_ref = speed * (1.0 - slip_target) / radius;
  const double error = omega_front - omega_ref;  // positive: wheel too fast
  const double unclamped_integral = integral_ + error * dt_;
  double torque = -config_.gain * error - config_.integral_gain * unclamped_integral;
  const double clamped = std::clamp(torque, config_.torque_min, config_.torque_max);
  // Anti-windup: only integrate while the actuator is not saturated.
  if (clamped == torque) integral_ = unclamped_integral;
  return clamped;
}

SensorFilter::SensorFilter(SensorFilterConfig config, double dt)
    : speed_(config.body_cutoff_hz, dt), front_(config.wheel_cutoff_hz, dt), rear_(config.wheel_cutoff_hz, dt) {}

FilteredSignals SensorFilter::update(const Measurement& y) {
  if (!primed_) {
    speed_.reset(y.U);
    front_.reset(y.omega_front);
    rear_.reset(y.omega_rear);
    primed_ = true;
  }
  return {speed_.update(y.U), front_.update(y.omega_front), rear_.update(y.omega_rear)};
}

void CspConfig::validate() const {
  const double nyquist = 0.5 / dt;
  if (!(dither_amplitude >= 0.0) || !(dither_hz > 0.0) || !(adaptation_gain > 0.0)) {
    throw std::invalid_argument("CSP dither and gain must be positive");
  }
  if (!(filters.body_cutoff_hz < nyquist) || !(filters.wheel_cutoff_hz < nyquist)) {
    throw std::invalid_argument("filter cutoff above Nyquist");
  }
  if (!(inner.gain > 0.0)) throw std::invalid_argument("slip tracking gain must be positive");
}

CspController::CspController(CspConfig config)
    : config_(config),
      sensors_(config.filters, config.dt),
      tracker_(config.inner, config.dt),
      objective_(config.objective_cutoff_hz, config.dt),
      washout_(config.washout_hz, config.dt),
      slip_hat_(config.initial_slip),
      slip_target_(config.initial_slip) {
  config_.validate();
}

double CspController::step(const Measurement& y, double radius) {
  const auto s = sensors_.update(y);

  // Deceleration over a short window of the filtered speed.
  speed_history_.push_back(s.speed);
  const auto window = static_cast<std::size_t>(std::lround(config_.derivative_window / config_.dt));
  double decel = 0.0;
  if (speed_history_.size() > window) {
    decel = (speed_history_.front() - speed_history_.back()) / config_.derivative_window;
    speed_history_.pop_front();
  }
  const double objective = objective_.update(decel);
  // High-pass by subtracting the slow trend.
  const double trend = washout_.update(objective);
  const double phase = 2.0 * std::numbers::pi * config_.dither_hz * time_;
  // Demodulate with the dither itself, so without excitation nothing adapts.
  const double gradient = (objective - trend) * config_.dither_amplitude * std::sin(phase);
  slip_hat_ = std::clamp(slip_hat_ + config_.adaptation_gain * gradient * config_.dt, config_.min_slip,
                         config_.max_slip);

  time_ += config_.dt;
  slip_target_ = slip_hat_ + config_.dither_amplitude * std::sin(2.0 * std::numbers::pi * config_.dither_hz * time_);
  return tracker_.update(slip_target_, s.speed, s.omega_front, radius);
}

void BisectionConfig::validate() const {
  if (!(lower < upper)) throw std::invalid_argument("bisection bracket must satisfy a < b");
  if (!(tolerance > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  if (!(settle_time >= 0.0) || !(measure_time > 0.0)) throw std::invalid_argument("invalid probe timing");
}

SlipBracket::SlipBracket(double lower, double upper, double tolerance)
    : lower_(lower), upper_(upper), tolerance_(tolerance) {
  if (!(lower < upper)) throw std::invalid_argument("bisection bracket must satisfy a < b");
  if (!(tolerance > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
}

void SlipBracket::halve(bool rising) {
  if (converged()) return;
  const double mid = midpoint();
  if (rising) lower_ = mid;
  else upper_ = mid;
  ++halvings_;
}

bool SlipBracket::check_ends(bool rising_at_lower, bool rising_at_upper) {
  if (rising_at_lower == rising_at_upper) {
    std::clog << "bisection: optimum not bracketed by [" << lower_ << ", " << upper_ << "], keeping bracket\n";
    return false;
  }
  return true;
}

BisectionController::BisectionController(BisectionConfig config)
    : config_(config),
      sensors_(config.filters, config.dt),
      tracker_(config.inner, config.dt),
      bracket_(config.lower, config.upper, config.tolerance),
      slip_target_(bracket_.midpoint() - config.probe_offset) {
  config_.validate();
}

void BisectionController::begin(Phase phase) {
  phase_ = phase;
  phase_time_ = 0.0;
}

double BisectionController::step(const Measurement& y, double radius) {
  const auto s = sensors_.update(y);
  phase_time_ += config_.dt;

  // Normalised wheel deceleration over the window, corrected for the slip
  // the wheel is held at so probes at different slips are comparable.
  auto criterion = [&]() {
    const double drop = (window_start_omega_ - s.omega_front) * radius / (1.0 - slip_target_);
    return drop / (kGravity * config_.measure_time);
  };

  switch (phase_) {
    case Phase::settle_low:
    case Phase::settle_high:
      if (phase_time_ >= config_.settle_time) {
        window_start_omega_ = s.omega_front;
        window_start_speed_ = s.speed;
        begin(phase_ == Phase::settle_low ? Phase::measure_low : Phase::measure_high);
      }
      break;
    case Phase::measure_low:
      if (phase_time_ >= config_.measure_time) {
        low_criterion_ = criterion();
        slip_target_ = bracket_.midpoint() + config_.probe_offset;
        begin(Phase::settle_high);
      }
      break;
    case Phase::measure_high:
      if (phase_time_ >= config_.measure_time) {
        bracket_.halve(criterion() > low_criterion_);
        if (bracket_.converged()) {
          slip_target_ = bracket_.midpoint();
          begin(Phase::hold);
        } else {
          slip_target_ = bracket_.midpoint() - config_.probe_offset;
          begin(Phase::settle_low);
        }
      }
      break;
    case Phase::hold:
      break;
  }
  return tracker_.update(slip_target_, s.speed, s.omega_front, radius);
}

}  // namespace abs_lab

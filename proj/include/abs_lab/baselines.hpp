#pragma once

#include <deque>
#include <string>

#include "abs_lab/estimation_model.hpp"
#include "abs_lab/vehicle.hpp"

namespace abs_lab {

/// First-order IIR low-pass with unity DC gain, discretised exactly for a
/// fixed sample time.
class LowPassFilter {
 public:
  LowPassFilter(double cutoff_hz, double dt, double initial = 0.0);

  double update(double x);
  void reset(double value) { y_ = value; }
  double value() const { return y_; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  double y_;
};

/// Wheel-speed tracking loop shared by both extremum seekers: the brake
/// torque follows the wheel speed that realises a target slip magnitude.
struct SlipTrackingConfig {
  double gain = 500.0;           // N m per rad/s of wheel-speed error
  double integral_gain = 10000.0;  // N m per rad of accumulated error
  double torque_min = -4000.0;
  double torque_max = 0.0;
};

class SlipTracker {
 public:
  SlipTracker(SlipTrackingConfig config, double dt) : config_(config), dt_(dt) {}

  /// Torque that drives the filtered front wheel speed toward
  /// speed * (1 - slip) / R.
  double update(double slip_target, double speed, double omega_front, double radius);

 private:
  SlipTrackingConfig config_;
  double dt_;
  double integral_ = 0.0;
};

/// Front-end filtering common to both baselines.
struct SensorFilterConfig {
  double body_cutoff_hz = 20.0;
  double wheel_cutoff_hz = 100.0;
};

struct FilteredSignals {
  double speed = 0.0;
  double omega_front = 0.0;
  double omega_rear = 0.0;
};

class SensorFilter {
 public:
  SensorFilter(SensorFilterConfig config, double dt);
  FilteredSignals update(const Measurement& y);

 private:
  LowPassFilter speed_;
  LowPassFilter front_;
  LowPassFilter rear_;
  bool primed_ = false;
};

/// Continuous sine perturbation extremum seeker on the slip set-point. The
/// measured objective is the vehicle deceleration.
struct CspConfig {
  double dither_amplitude = 0.03;
  double dither_hz = 2.0;
  double adaptation_gain = 3.0;
  double washout_hz = 2.0;
  double objective_cutoff_hz = 20.0;
  double derivative_window = 0.05;  // s
  double initial_slip = 0.03;
  double min_slip = 0.02;
  double max_slip = 0.6;
  double dt = 0.001;
  SensorFilterConfig filters;
  SlipTrackingConfig inner;

  void validate() const;
};

class CspController {
 public:
  explicit CspController(CspConfig config);

  /// Torque for the next control period from a raw measurement.
  double step(const Measurement& y, double radius);

  double slip_estimate() const { return slip_hat_; }
  double slip_target() const { return slip_target_; }
  const CspConfig& config() const { return config_; }

 private:
  CspConfig config_;
  SensorFilter sensors_;
  SlipTracker tracker_;
  LowPassFilter objective_;
  LowPassFilter washout_;
  std::deque<double> speed_history_;
  double slip_hat_;
  double slip_target_;
  double time_ = 0.0;
};

/// Bracket search on the optimal slip magnitude.
struct BisectionConfig {
  double lower = 0.1;
  double upper = 0.2;
  double tolerance = 0.001;
  double probe_offset = 0.02;
  double settle_time = 0.03;   // s discarded after each set-point change
  double measure_time = 0.06;  // s of averaging per probe
  double dt = 0.001;
  SensorFilterConfig filters;
  SlipTrackingConfig inner;

  void validate() const;
};

/// Pure bracket bookkeeping, separated from the signal processing.
class SlipBracket {
 public:
  SlipBracket(double lower, double upper, double tolerance);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  double midpoint() const { return 0.5 * (lower_ + upper_); }
  bool converged() const { return width() <= tolerance_; }
  int halvings() const { return halvings_; }

  /// `rising` is true when deeper slip at the midpoint still increases the
  /// criterion, so the optimum lies above it.
  void halve(bool rising);

  /// Checks the criterion signs at both ends. Identical signs mean the
  /// optimum is not bracketed; the bracket is kept and false returned.
  bool check_ends(bool rising_at_lower, bool rising_at_upper);

 private:
  double lower_;
  double upper_;
  double tolerance_;
  int halvings_ = 0;
};

class BisectionController {
 public:
  explicit BisectionController(BisectionConfig config);

  double step(const Measurement& y, double radius);

  const SlipBracket& bracket() const { return bracket_; }
  double slip_target() const { return slip_target_; }

 private:
  enum class Phase { settle_low, measure_low, settle_high, measure_high, hold };

  void begin(Phase phase);

  BisectionConfig config_;
  SensorFilter sensors_;
  SlipTracker tracker_;
  SlipBracket bracket_;
  Phase phase_ = Phase::settle_low;
  double phase_time_ = 0.0;
  double slip_target_;
  // Normalised wheel deceleration accumulated over the measuring window.
  double window_start_omega_ = 0.0;
  double window_start_speed_ = 0.0;
  double low_criterion_ = 0.0;
};

}  // namespace abs_lab

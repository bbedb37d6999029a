#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abs_lab/baselines.hpp"
#include "abs_lab/dcee.hpp"
#include "abs_lab/estimator.hpp"
#include "abs_lab/plant.hpp"
#include "abs_lab/tyre.hpp"

namespace abs_lab {

inline constexpr double kMetersPerSecondPerMph = 0.44704;

enum class ControllerKind { dcee, csp, bisection };

std::string to_string(ControllerKind kind);
std::optional<ControllerKind> controller_from_string(const std::string& name);

struct ScenarioConfig {
  std::string name = "run";
  double initial_speed = 20.0;  // m/s
  RoadSchedule road{surfaces::dry(), "dry"};
  ControllerKind controller = ControllerKind::dcee;
  std::size_t particles = 1000;
  std::uint64_t seed = 7;
  double dt = 0.001;
  /// RK4 substeps of the plant per control period.
  int plant_substeps = 4;
  MeasurementNoise sensor;
  bool retrogressive = true;
  double timeout = 40.0;
  double stop_speed = 0.5;
  /// Lock events are only counted above this speed.
  double lock_speed = 1.5;
  VehicleParams vehicle;
  DceeConfig dcee;
  FilterOptions filter;
  CspConfig csp;
  BisectionConfig bisection;
  /// Directory for trace and metrics files; empty disables file output.
  std::string output;

  /// Throws std::invalid_argument on a malformed configuration.
  void validate() const;
};

/// One row per control step; column order is fixed by trace_header().
struct TraceRow {
  double t = 0.0;
  double U_true = 0.0, omega_f_true = 0.0, omega_r_true = 0.0;
  double U_meas = 0.0, omega_f_meas = 0.0, omega_r_meas = 0.0;
  double U_est = 0.0, omega_f_est = 0.0, omega_r_est = 0.0;
  double B_est = 0.0, C_est = 0.0, D_est = 0.0, E_est = 0.0;
  double D_min = 0.0, D_max = 0.0;
  double kappa_f = 0.0;
  double mu_f_true = 0.0;
  double torque = 0.0;
  double J = 0.0;
  double P_pred = 0.0;
  double N_eff = 0.0;
  bool resampled = false;
  bool retro = false;
  bool lock = false;
  /// Not written to the trace: true peak factor, for metrics.
  double D_true = 0.0;
};

struct RunMetrics {
  std::string name;
  ControllerKind controller = ControllerKind::dcee;
  std::uint64_t seed = 0;
  double initial_speed = 0.0;
  std::string road;
  std::size_t particles = 0;
  double dt = 0.0;
  bool retrogressive = false;
  bool stopped = false;
  bool aborted = false;
  std::string error;
  double stopping_time = 0.0;
  double stopping_distance = 0.0;
  int lock_events = 0;
  double steady_mu_error = 0.0;
  double initial_uncertainty = 0.0;
  int retro_events = 0;
  double max_rel_error_U = 0.0;
  double max_rel_error_omega_f = 0.0;
  double max_rel_error_omega_r = 0.0;
  std::size_t steps = 0;
  double wall_time = 0.0;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TraceRow> trace;
};

/// Seeded additive Gaussian sensor noise.
class SensorNoise {
 public:
  SensorNoise(std::uint64_t seed, MeasurementNoise covariance);
  Measurement corrupt(const Measurement& truth);

 private:
  Rng rng_;
  std::array<double, 3> sigma_;
};

/// Seed of the sensor-noise stream for a scenario seed.
std::uint64_t sensor_seed(std::uint64_t scenario_seed);

/// Closed-loop run until the stop rule or the timeout. Plant divergence or a
/// non-finite estimate aborts the run with a partial trace.
RunResult run(const ScenarioConfig& config);

/// Runs every configuration, in parallel over `workers` threads, and returns
/// metrics in input order.
std::vector<RunMetrics> sweep(const std::vector<ScenarioConfig>& configs, unsigned workers = 1);

}  // namespace abs_lab

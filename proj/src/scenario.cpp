#include "abs_lab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <variant>

#include "abs_lab/trace.hpp"

namespace abs_lab {

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::dcee: return "dcee";
    case ControllerKind::csp: return "csp";
    case ControllerKind::bisection: return "bisection";
  }
  return "unknown";
}

std::optional<ControllerKind> controller_from_string(const std::string& name) {
  if (name == "dcee") return ControllerKind::dcee;
  if (name == "csp") return ControllerKind::csp;
  if (name == "bisection") return ControllerKind::bisection;
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid scenario: " + what);
  };
  require(initial_speed > 0.0, "initial speed must be positive");
  require(dt > 0.0, "dt must be positive");
  require(plant_substeps >= 1, "plant substeps must be at least 1");
  require(!road.empty(), "road schedule is empty");
  require(particles >= 2, "need at least two particles");
  require(timeout > 0.0, "timeout must be positive");
  require(stop_speed > 0.0 && stop_speed < initial_speed, "stop speed must lie in (0, initial speed)");
  for (double v : sensor.variance) require(v > 0.0, "sensor variances must be positive");
  vehicle.validate();
  dcee.actions.validate();
  csp.validate();
  bisection.validate();
}

SensorNoise::SensorNoise(std::uint64_t seed, MeasurementNoise covariance) : rng_(seed) {
  for (std::size_t i = 0; i < 3; ++i) sigma_[i] = std::sqrt(covariance.variance[i]);
}

Measurement SensorNoise::corrupt(const Measurement& truth) {
  Measurement y = truth;
  y.U += sigma_[0] * rng_.normal();
  y.omega_front += sigma_[1] * rng_.normal();
  y.omega_rear += sigma_[2] * rng_.normal();
  return y;
}

std::uint64_t sensor_seed(std::uint64_t scenario_seed) { return derive_seed(scenario_seed, 1); }

namespace {

Measurement observe(const PlantState& s) {
  return {s.U, 0.5 * (s.omega[0] + s.omega[1]), 0.5 * (s.omega[2] + s.omega[3])};
}

bool finite(const AugmentedState& a) {
  for (double v : a.to_array()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string describe(const RoadSchedule& road) {
  std::string out;
  for (const auto& seg : road.segments()) {
    if (!out.empty()) out += ";";
    out += seg.label.empty() ? "custom" : seg.label;
    if (seg.start > 0.0) out += "@" + std::to_string(seg.start);
  }
  return out;
}

struct DceeLoop {
  ParticleFilter filter;
  DceeController controller;
  double last_variance = 0.0;
  bool last_underflow = false;
};

struct BaselineLoop {
  std::variant<CspController, BisectionController> controller;
  SensorFilter display;
};

void finalize_metrics(const ScenarioConfig& config, RunResult& result) {
  auto& m = result.metrics;
  const auto& trace = result.trace;

  double last_switch = 0.0;
  for (const auto& seg : config.road.segments()) last_switch = std::max(last_switch, seg.start);
  const double window_start = last_switch + 0.3;

  double mu_error = 0.0;
  std::size_t mu_count = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& r = trace[k];
    if (r.t >= window_start && r.U_true >= 5.0) {
      mu_error += r.D_true - std::abs(r.mu_f_true);
      ++mu_count;
    }
    if (k >= 13 && r.U_true >= 5.0) {
      m.max_rel_error_U = std::max(m.max_rel_error_U, std::abs(r.U_est - r.U_true) / r.U_true);
      m.max_rel_error_omega_f =
          std::max(m.max_rel_error_omega_f, std::abs(r.omega_f_est - r.omega_f_true) / std::max(r.omega_f_true, 1e-9));
      m.max_rel_error_omega_r =
          std::max(m.max_rel_error_omega_r, std::abs(r.omega_r_est - r.omega_r_true) / std::max(r.omega_r_true, 1e-9));
    }
  }
  m.steady_mu_error = mu_count > 0 ? mu_error / static_cast<double>(mu_count) : std::nan("");
}

}  // namespace

RunResult run(const ScenarioConfig& config) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  RunResult result;
  auto& m = result.metrics;
  m.name = config.name;
  m.controller = config.controller;
  m.seed = config.seed;
  m.initial_speed = config.initial_speed;
  m.road = describe(config.road);
  m.particles = config.particles;
  m.dt = config.dt;
  m.retrogressive = config.retrogressive;

  const VehicleParams& params = config.vehicle;
  const double R = params.rolling_radius;
  const double dt = config.dt;
  SensorNoise sensors(sensor_seed(config.seed), config.sensor);

  PlantState state = rolling_state(config.initial_speed, params);
  std::optional<DceeLoop> dcee;
  std::optional<BaselineLoop> baseline;
  if (config.controller != ControllerKind::dcee) {
    SensorFilterConfig display_filters = config.controller == ControllerKind::csp ? config.csp.filters
                                                                                  : config.bisection.filters;
    if (config.controller == ControllerKind::csp) {
      baseline.emplace(BaselineLoop{CspController(config.csp), SensorFilter(display_filters, dt)});
    } else {
      baseline.emplace(BaselineLoop{BisectionController(config.bisection), SensorFilter(display_filters, dt)});
    }
  }

  double torque = 0.0;
  double distance = 0.0;
  bool locked = false;
  const auto max_steps = static_cast<std::size_t>(std::ceil(config.timeout / dt));

  try {
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt;
      const MagicParams& road = config.road.at(t);
      const Measurement truth = observe(state);
      const Measurement y = sensors.corrupt(truth);

      TraceRow row;
      row.t = t;
      row.U_true = truth.U;
      row.omega_f_true = truth.omega_front;
      row.omega_r_true = truth.omega_rear;
      row.U_meas = y.U;
      row.omega_f_meas = y.omega_front;
      row.omega_r_meas = y.omega_rear;
      row.D_true = road.D;
      row.kappa_f = slip_ratio(truth.omega_front, truth.U, R);
      row.mu_f_true = friction(row.kappa_f, road);

      if (config.controller == ControllerKind::dcee) {
        if (k == 0) {
          PriorSpec prior = PriorSpec::around(y, config.particles);
          dcee.emplace(DceeLoop{ParticleFilter(prior, derive_seed(config.seed, 2), params, config.sensor, config.filter),
                                DceeController(config.dcee, params, dt, derive_seed(config.seed, 3))});
          row.N_eff = effective_sample_size(dcee->filter.ensemble());
        } else {
          if (config.retrogressive) {
            // A step on which no particle could explain the data counts as
            // unbounded uncertainty.
            const double uncertainty =
                dcee->last_underflow ? std::numeric_limits<double>::infinity() : dcee->last_variance;
            row.retro = dcee->filter.retrogressive(uncertainty);
            if (row.retro) ++m.retro_events;
          }
          const auto report = dcee->filter.update(torque, y, dt);
          dcee->last_underflow = report.weights.underflow;
          row.N_eff = report.resample.n_eff;
          row.resampled = report.resample.resampled;
        }
        const auto& ens = dcee->filter.ensemble();
        const Decision decision = dcee->controller.select_action(ens, torque);
        if (k == 0) {
          dcee->filter.prior().initial_uncertainty = decision.max_variance;
          m.initial_uncertainty = decision.max_variance;
        }
        dcee->last_variance = decision.max_variance;
        torque = decision.torque;
        row.J = decision.chosen.value;
        row.P_pred = decision.max_variance;

        const AugmentedState mean = posterior_mean(ens);
        if (!finite(mean)) throw std::runtime_error("non-finite posterior mean at t=" + std::to_string(t));
        row.U_est = mean.U;
        row.omega_f_est = mean.omega_front;
        row.omega_r_est = mean.omega_rear;
        row.B_est = mean.theta.B;
        row.C_est = mean.theta.C;
        row.D_est = mean.theta.D;
        row.E_est = mean.theta.E;
        row.D_min = std::numeric_limits<double>::infinity();
        row.D_max = -std::numeric_limits<double>::infinity();
        for (const auto& p : ens.particles) {
          row.D_min = std::min(row.D_min, p.theta.D);
          row.D_max = std::max(row.D_max, p.theta.D);
        }
      } else {
        const auto shown = baseline->display.update(y);
        row.U_est = shown.speed;
        row.omega_f_est = shown.omega_front;
        row.omega_r_est = shown.omega_rear;
        row.B_est = row.C_est = row.D_est = row.E_est = std::nan("");
        row.D_min = row.D_max = std::nan("");
        row.J = row.P_pred = row.N_eff = std::nan("");
        torque = std::visit([&](auto& c) { return c.step(y, R); }, baseline->controller);
      }
      row.torque = torque;

      bool any_lock = false;
      for (double w : state.omega) any_lock = any_lock || (w * R <= 0.01 * state.U);
      row.lock = any_lock && state.U > config.lock_speed;
      if (row.lock && !locked) ++m.lock_events;
      locked = row.lock;

      result.trace.push_back(row);
      m.steps = k + 1;

      if (k >= max_steps) break;

      const PlantState before = state;
      const double h = dt / config.plant_substeps;
      for (int s = 0; s < config.plant_substeps; ++s) {
        state = step(state, WheelTorques::both(torque), params, config.road.at(t + s * h), h);
      }
      distance += 0.5 * (before.U + state.U) * dt;

      if (state.U <= config.stop_speed) {
        const double decel = (before.U - state.U) / dt;
        // Interpolate the crossing of the stop speed, then extrapolate to rest
        // at the final deceleration.
        const double frac = decel > 0.0 ? (before.U - config.stop_speed) / (before.U - state.U) : 1.0;
        const double t_cross = t + frac * dt;
        const double d_cross = distance - 0.5 * (config.stop_speed + state.U) * (1.0 - frac) * dt;
        m.stopped = true;
        if (decel > 0.0) {
          m.stopping_time = t_cross + config.stop_speed / decel;
          m.stopping_distance = d_cross + config.stop_speed * config.stop_speed / (2.0 * decel);
        } else {
          m.stopping_time = t_cross;
          m.stopping_distance = d_cross;
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    m.aborted = true;
    m.error = e.what();
  }

  if (!m.stopped) {
    m.stopping_time = std::nan("");
    m.stopping_distance = std::nan("");
  }
  finalize_metrics(config, result);
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  if (!config.output.empty()) {
    write_trace_csv(trace_path(config.output, config.name), result.trace);
    write_metrics_csv(metrics_path(config.output, config.name), {m});
  }
  return result;
}

std::vector<RunMetrics> sweep(const std::vector<ScenarioConfig>& configs, unsigned workers) {
  std::vector<RunMetrics> out(configs.size());
  if (configs.empty()) return out;
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(configs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(configs.size());
  auto worker = [&]() {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        out[i] = run(configs[i]).metrics;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace abs_lab

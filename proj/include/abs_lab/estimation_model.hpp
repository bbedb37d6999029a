#pragma once

#include <array>

#include "abs_lab/tyre.hpp"
#include "abs_lab/vehicle.hpp"

namespace abs_lab {

/// Per-particle state of the filter: vehicle speed, front and rear wheel
/// speeds, and the Magic Formula coefficients of the road being driven on.
struct AugmentedState {
  static constexpr std::size_t kSize = 7;

  double U = 0.0;
  double omega_front = 0.0;
  double omega_rear = 0.0;
  MagicParams theta;

  std::array<double, kSize> to_array() const {
    return {U, omega_front, omega_rear, theta.B, theta.C, theta.D, theta.E};
  }
  static AugmentedState from_array(const std::array<double, kSize>& v) {
    return {v[0], v[1], v[2], {v[3], v[4], v[5], v[6]}};
  }

  friend bool operator==(const AugmentedState&, const AugmentedState&) = default;
};

/// Noisy observation of [U, omega_front, omega_rear].
struct Measurement {
  double U = 0.0;
  double omega_front = 0.0;
  double omega_rear = 0.0;
};

struct AxleLoads {
  double front = 0.0;
  double rear = 0.0;
};

/// Quasi-static vertical axle loads for longitudinal acceleration `accel`
/// (m/s^2, negative when braking). Always sums to m g.
AxleLoads vertical_loads(double accel, const VehicleParams& params);

/// Result of one model step together with the quantities the controller
/// needs from it.
struct ModelStep {
  AugmentedState next;
  double accel = 0.0;     // dU/dt over the step, m/s^2
  AxleLoads loads;        // loads at the start of the step
  double front_slip = 0.0;
  /// Front wheel speed at the end of the step without the zero floor; below
  /// zero it tells how hard a locked wheel is being held.
  double omega_front_unclamped = 0.0;
};

/// Advances [U, omega_front, omega_rear] by `dt` with explicit Euler under the
/// per-wheel front brake torque `front_torque`. Theta is carried unchanged.
/// A non-positive U freezes the state.
ModelStep advance(const AugmentedState& chi, double front_torque, double dt, const VehicleParams& params);

inline AugmentedState predict_state(const AugmentedState& chi, double front_torque, double dt,
                                    const VehicleParams& params) {
  return advance(chi, front_torque, dt, params).next;
}

/// Explicit Euler substeps needed to keep the wheel dynamics of `chi` stable
/// over `dt`.
int euler_substeps(const AugmentedState& chi, double dt, const VehicleParams& params);

}  // namespace abs_lab

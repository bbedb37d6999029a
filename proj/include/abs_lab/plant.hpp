#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "abs_lab/tyre.hpp"
#include "abs_lab/vehicle.hpp"

namespace abs_lab {

/// Truth state of the 7-DOF longitudinal model. Wheels are ordered
/// front-left, front-right, rear-left, rear-right.
struct PlantState {
  double U = 0.0;      // longitudinal velocity, m/s
  double W = 0.0;      // vertical velocity (SAE, down positive), m/s
  double q = 0.0;      // pitch rate, rad/s
  double z = 0.0;      // heave displacement from unloaded springs, m
  double pitch = 0.0;  // pitch angle (nose up positive), rad
  std::array<double, 4> omega{};  // wheel speeds, rad/s

  friend bool operator==(const PlantState&, const PlantState&) = default;
};

/// Time derivative of every component of PlantState.
using PlantStateDerivative = PlantState;

/// Brake torques on the front wheels (N m, negative when braking).
/// The rear wheels are never driven or braked.
struct WheelTorques {
  double front_left = 0.0;
  double front_right = 0.0;

  static WheelTorques both(double torque) { return {torque, torque}; }
  std::array<double, 4> per_wheel() const { return {front_left, front_right, 0.0, 0.0}; }
};

/// Per-axle suspension forces (upward on the body, N).
struct SuspensionForces {
  double front = 0.0;
  double rear = 0.0;
};

struct StaticEquilibrium {
  double z = 0.0;
  double pitch = 0.0;
};

class PlantDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Earth-frame heave velocity dz/dt. W is measured along the pitched body
/// axis, so forward speed leaks into it when the body is pitched.
double heave_rate(const PlantState& state);

SuspensionForces suspension_forces(const PlantState& state, const VehicleParams& params);

/// Heave and pitch at which the springs carry the weight with zero net moment.
StaticEquilibrium static_equilibrium(const VehicleParams& params);

/// Vehicle at rest on its suspension, rolling freely at `speed`.
PlantState rolling_state(double speed, const VehicleParams& params);

/// Longitudinal tyre forces for all four wheels (N).
std::array<double, 4> tyre_forces(const PlantState& state, const VehicleParams& params, const MagicParams& road);

PlantStateDerivative plant_derivatives(const PlantState& state, const WheelTorques& torques,
                                       const VehicleParams& params, const MagicParams& road);

/// One RK4 step. Wheel speeds are floored at zero afterwards. Throws
/// PlantDivergence if any component becomes non-finite.
PlantState step(const PlantState& state, const WheelTorques& torques, const VehicleParams& params,
                const MagicParams& road, double dt);

}  // namespace abs_lab

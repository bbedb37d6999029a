#pragma once

namespace abs_lab {

inline constexpr double kGravity = 9.81;

/// Rigid-body, suspension and wheel parameters of the braked vehicle.
///
/// Positions use the SAE body frame (x forward, z down) with the origin at
/// road level under the centre of gravity. `a` is the signed distance to the
/// front axle (positive) and `b` to the rear axle (negative).
struct VehicleParams {
  double mass = 1838.35;          // kg
  double pitch_inertia = 3983.0;  // kg m^2
  double wheel_inertia = 1.25;    // kg m^2
  double rolling_radius = 0.29;   // m
  double k_front = 20090.0;       // N/m
  double k_rear = 22700.0;        // N/m
  double c_front = 2000.0;        // N s/m
  double c_rear = 2260.0;         // N s/m
  double a = 1.455;               // m
  double b = -1.575;              // m
  double x_g = 0.0;               // m
  double y_g = 0.0;               // m
  double z_g = -0.4427;           // m

  /// Throws std::invalid_argument when a physical invariant is violated.
  void validate() const;

  double wheelbase() const;

  /// Jaguar XJ parameter set used throughout the experiments.
  static VehicleParams jaguar_xj() { return {}; }
};

}  // namespace abs_lab

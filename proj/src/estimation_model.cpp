#include "abs_lab/estimation_model.hpp"

#include <algorithm>
#include <cmath>

namespace abs_lab {

namespace {

constexpr int kMaxSubsteps = 100;

struct CornerRates {
  double accel;
  double omega_front_dot;
  double omega_rear_dot;
  AxleLoads loads;
  double front_slip;
  double rear_slip;
};

CornerRates rates(double U, double omega_f, double omega_r, const MagicParams& theta, double front_torque,
                  const VehicleParams& p) {
  const double R = p.rolling_radius;
  const double kappa_f = (omega_f * R - U) / U;
  const double kappa_r = (omega_r * R - U) / U;
  const double mu_f = friction(kappa_f, theta);
  const double mu_r = friction(kappa_r, theta);

  // The loads depend on the deceleration they produce; the relation is
  // linear so the loop closes exactly.
  const double L = p.wheelbase();
  const double transfer = p.mass * std::abs(p.z_g) / L;
  const auto rest = vertical_loads(0.0, p);
  const double accel = (mu_f * rest.front + mu_r * rest.rear) / (p.mass - (mu_r - mu_f) * transfer);
  auto loads = vertical_loads(accel, p);
  loads.front = std::max(loads.front, 0.0);
  loads.rear = std::max(loads.rear, 0.0);

  CornerRates out;
  out.accel = accel;
  out.omega_front_dot = (front_torque - R * mu_f * 0.5 * loads.front) / p.wheel_inertia;
  out.omega_rear_dot = (-R * mu_r * 0.5 * loads.rear) / p.wheel_inertia;
  out.loads = loads;
  out.front_slip = kappa_f;
  out.rear_slip = kappa_r;
  return out;
}

}  // namespace

AxleLoads vertical_loads(double accel, const VehicleParams& p) {
  const double L = std::abs(p.a) + std::abs(p.b);
  const double weight = p.mass * kGravity;
  const double transfer = p.mass * std::abs(p.z_g) * (-accel) / L;
  return {weight * std::abs(p.b) / L + transfer, weight * std::abs(p.a) / L - transfer};
}

int euler_substeps(const AugmentedState& chi, double dt, const VehicleParams& p) {
  if (!(chi.U > 0.0)) return 1;
  const double R = p.rolling_radius;
  // One axle never carries more than the whole weight.
  const double heaviest = 0.5 * p.mass * kGravity;
  const double slope_f = std::abs(friction_slope((chi.omega_front * R - chi.U) / chi.U, chi.theta));
  const double slope_r = std::abs(friction_slope((chi.omega_rear * R - chi.U) / chi.U, chi.theta));
  // Wheel-speed eigenvalue of the linearised corner: R^2 Fz mu' / (I_w U).
  const double lambda = R * R * heaviest * std::max(slope_f, slope_r) / (p.wheel_inertia * chi.U);
  const double n = std::ceil(lambda * dt);
  if (!(n >= 1.0)) return 1;
  return static_cast<int>(std::min(n, static_cast<double>(kMaxSubsteps)));
}

ModelStep advance(const AugmentedState& chi, double front_torque, double dt, const VehicleParams& p) {
  ModelStep out;
  out.next = chi;
  out.omega_front_unclamped = chi.omega_front;
  if (!(chi.U > 0.0)) {
    out.loads = vertical_loads(0.0, p);
    return out;
  }

  const int substeps = euler_substeps(chi, dt, p);
  const double h = dt / substeps;
  double U = chi.U;
  double wf = chi.omega_front;
  double wr = chi.omega_rear;
  for (int i = 0; i < substeps; ++i) {
    const auto r = rates(U, wf, wr, chi.theta, front_torque, p);
    if (i == 0) {
      out.loads = r.loads;
      out.front_slip = r.front_slip;
    }
    U += h * r.accel;
    out.omega_front_unclamped = wf + h * r.omega_front_dot;
    wf = std::max(out.omega_front_unclamped, 0.0);
    wr = std::max(wr + h * r.omega_rear_dot, 0.0);
    if (!(U > 0.0)) {
      U = 0.0;
      break;
    }
  }
  out.accel = (U - chi.U) / dt;
  out.next.U = U;
  out.next.omega_front = wf;
  out.next.omega_rear = wr;
  return out;
}

}  // namespace abs_lab

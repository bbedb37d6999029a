#include "abs_lab/plant.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace abs_lab {

void VehicleParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid vehicle parameters: ") + what);
  };
  require(mass > 0.0, "mass must be positive");
  require(pitch_inertia > 0.0, "pitch inertia must be positive");
  require(wheel_inertia > 0.0, "wheel inertia must be positive");
  require(rolling_radius > 0.0, "rolling radius must be positive");
  require(k_front > 0.0 && k_rear > 0.0, "suspension stiffness must be positive");
  require(c_front > 0.0 && c_rear > 0.0, "suspension damping must be positive");
  require(a > 0.0 && b < 0.0, "front axle must lie ahead of the CoG and rear axle behind");
}

double VehicleParams::wheelbase() const { return a - b; }

namespace {

PlantState axpy(const PlantState& x, double h, const PlantStateDerivative& d) {
  PlantState out;
  out.U = x.U + h * d.U;
  out.W = x.W + h * d.W;
  out.q = x.q + h * d.q;
  out.z = x.z + h * d.z;
  out.pitch = x.pitch + h * d.pitch;
  for (std::size_t j = 0; j < 4; ++j) out.omega[j] = x.omega[j] + h * d.omega[j];
  return out;
}

bool finite(const PlantState& s) {
  bool ok = std::isfinite(s.U) && std::isfinite(s.W) && std::isfinite(s.q) && std::isfinite(s.z) &&
            std::isfinite(s.pitch);
  for (double w : s.omega) ok = ok && std::isfinite(w);
  return ok;
}

}  // namespace

double heave_rate(const PlantState& s) { return s.W - s.U * s.pitch; }

SuspensionForces suspension_forces(const PlantState& s, const VehicleParams& p) {
  const double a = std::abs(p.a);
  const double b = std::abs(p.b);
  const double zdot = heave_rate(s);
  // One spring/damper per corner, two corners per axle.
  return {2.0 * (p.k_front * (s.z - a * s.pitch) + p.c_front * (zdot - a * s.q)),
          2.0 * (p.k_rear * (s.z + b * s.pitch) + p.c_rear * (zdot + b * s.q))};
}

StaticEquilibrium static_equilibrium(const VehicleParams& p) {
  const double weight = p.mass * kGravity;
  const double front = weight * (p.x_g - p.b) / (p.a - p.b);
  const double rear = weight * (p.a - p.x_g) / (p.a - p.b);
  const double a = std::abs(p.a);
  const double b = std::abs(p.b);
  // 2 k_f (z - a phi) = F_f,  2 k_r (z + b phi) = F_r
  const double defl_f = front / (2.0 * p.k_front);
  const double defl_r = rear / (2.0 * p.k_rear);
  const double pitch = (defl_r - defl_f) / (a + b);
  return {defl_f + a * pitch, pitch};
}

PlantState rolling_state(double speed, const VehicleParams& p) {
  const auto eq = static_equilibrium(p);
  PlantState s;
  s.U = speed;
  s.z = eq.z;
  s.pitch = eq.pitch;
  s.W = speed * eq.pitch;
  s.omega.fill(speed / p.rolling_radius);
  return s;
}

std::array<double, 4> tyre_forces(const PlantState& s, const VehicleParams& p, const MagicParams& road) {
  const auto susp = suspension_forces(s, p);
  const double fz_front = std::max(0.5 * susp.front, 0.0);
  const double fz_rear = std::max(0.5 * susp.rear, 0.0);
  std::array<double, 4> fx{};
  for (std::size_t j = 0; j < 4; ++j) {
    const double kappa = slip_ratio(s.omega[j], s.U, p.rolling_radius);
    fx[j] = friction(kappa, road) * (j < 2 ? fz_front : fz_rear);
  }
  return fx;
}

PlantStateDerivative plant_derivatives(const PlantState& s, const WheelTorques& torques, const VehicleParams& p,
                                       const MagicParams& road) {
  const double m = p.mass;
  const auto susp = suspension_forces(s, p);
  const auto fx = tyre_forces(s, p, road);
  // The road pushes on the car horizontally (tyre forces) and vertically
  // (the wheel loads the springs carry); together with gravity these are
  // earth-frame forces, projected here onto the pitched body axes. SAE z is
  // down.
  const double road_x = fx[0] + fx[1] + fx[2] + fx[3];
  const double road_z = m * kGravity - susp.front - susp.rear;
  const double sin_p = std::sin(s.pitch);
  const double cos_p = std::cos(s.pitch);
  const double sum_fx = road_x * cos_p - road_z * sin_p;
  const double sum_fz = road_x * sin_p + road_z * cos_p;
  // Longitudinal tyre forces act at road level through the origin.
  const double moment = p.a * susp.front + p.b * susp.rear - p.x_g * m * kGravity;

  Eigen::Matrix3d lhs;
  lhs << m, 0.0, m * p.z_g,
         0.0, m, -m * p.x_g,
         m * p.z_g, -m * p.x_g, p.pitch_inertia;
  const Eigen::Vector3d rhs(sum_fx - m * s.W * s.q + m * p.x_g * s.q * s.q,
                            sum_fz + m * s.U * s.q + m * p.z_g * s.q * s.q,
                            moment - m * p.z_g * s.W * s.q - m * p.x_g * s.U * s.q);
  const double det = lhs.determinant();
  if (!(std::abs(det) > 1e-9 * m * m * p.pitch_inertia)) {
    throw PlantDivergence("singular body mass matrix");
  }
  const Eigen::Vector3d acc = lhs.partialPivLu().solve(rhs);

  PlantStateDerivative d;
  d.U = acc[0];
  d.W = acc[1];
  d.q = acc[2];
  d.z = heave_rate(s);
  d.pitch = s.q;
  const auto torque = torques.per_wheel();
  for (std::size_t j = 0; j < 4; ++j) {
    d.omega[j] = (torque[j] - p.rolling_radius * fx[j]) / p.wheel_inertia;
  }
  return d;
}

PlantState step(const PlantState& s, const WheelTorques& torques, const VehicleParams& p, const MagicParams& road,
                double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant step requires dt > 0");
  const auto k1 = plant_derivatives(s, torques, p, road);
  const auto k2 = plant_derivatives(axpy(s, 0.5 * dt, k1), torques, p, road);
  const auto k3 = plant_derivatives(axpy(s, 0.5 * dt, k2), torques, p, road);
  const auto k4 = plant_derivatives(axpy(s, dt, k3), torques, p, road);

  PlantStateDerivative slope;
  slope.U = (k1.U + 2.0 * k2.U + 2.0 * k3.U + k4.U) / 6.0;
  slope.W = (k1.W + 2.0 * k2.W + 2.0 * k3.W + k4.W) / 6.0;
  slope.q = (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q) / 6.0;
  slope.z = (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z) / 6.0;
  slope.pitch = (k1.pitch + 2.0 * k2.pitch + 2.0 * k3.pitch + k4.pitch) / 6.0;
  for (std::size_t j = 0; j < 4; ++j) {
    slope.omega[j] = (k1.omega[j] + 2.0 * k2.omega[j] + 2.0 * k3.omega[j] + k4.omega[j]) / 6.0;
  }
  PlantState next = axpy(s, dt, slope);
  for (double& w : next.omega) w = std::max(w, 0.0);

  if (!finite(next)) {
    std::ostringstream msg;
    msg << "plant diverged: U=" << next.U << " W=" << next.W << " q=" << next.q << " z=" << next.z
        << " pitch=" << next.pitch << " omega=[" << next.omega[0] << ", " << next.omega[1] << ", "
        << next.omega[2] << ", " << next.omega[3] << "] from U=" << s.U << " dt=" << dt;
    throw PlantDivergence(msg.str());
  }
  return next;
}

}  // namespace abs_lab

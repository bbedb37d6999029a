#include "doctest.h"

#include <cmath>

#include "abs_lab/plant.hpp"

using namespace abs_lab;

namespace {

PlantState integrate(PlantState s, double torque, const MagicParams& road, double dt, double duration) {
  const int n = static_cast<int>(std::lround(duration / dt));
  const auto p = VehicleParams::jaguar_xj();
  for (int i = 0; i < n; ++i) s = step(s, WheelTorques::both(torque), p, road, dt);
  return s;
}

double distance(const PlantState& a, const PlantState& b) {
  double d = std::pow(a.U - b.U, 2) + std::pow(a.W - b.W, 2) + std::pow(a.q - b.q, 2) + std::pow(a.z - b.z, 2) +
             std::pow(a.pitch - b.pitch, 2);
  for (std::size_t j = 0; j < 4; ++j) d += std::pow(a.omega[j] - b.omega[j], 2);
  return std::sqrt(d);
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("static equilibrium matches the two-spring solution") {
  const auto p = VehicleParams::jaguar_xj();
  const double L = p.a - p.b;
  const double W = p.mass * kGravity;
  const double Ff = W * (-p.b) / L;
  const double Fr = W * p.a / L;
  // 2 kf (z - a phi) = Ff, 2 kr (z - b phi) = Fr, by Cramer's rule.
  const double a11 = 2 * p.k_front, a12 = -2 * p.k_front * p.a;
  const double a21 = 2 * p.k_rear, a22 = -2 * p.k_rear * p.b;
  const double det = a11 * a22 - a12 * a21;
  const double z_star = (Ff * a22 - a12 * Fr) / det;
  const double phi_star = (a11 * Fr - a21 * Ff) / det;

  const auto eq = static_equilibrium(p);
  CHECK(eq.z == doctest::Approx(z_star).epsilon(1e-12));
  CHECK(eq.pitch == doctest::Approx(phi_star).epsilon(1e-12));

  // Released from a disturbed attitude, the free-rolling car settles there.
  auto s = rolling_state(10.0, p);
  s.z += 0.02;
  s.pitch -= 0.01;
  s = integrate(s, 0.0, surfaces::dry(), 1e-3, 12.0);
  CHECK(std::abs(s.z - z_star) < 1e-6);
  CHECK(std::abs(s.pitch - phi_star) < 1e-6);

  const auto susp = suspension_forces(rolling_state(10.0, p), p);
  CHECK(std::abs(susp.front + susp.rear - W) < 1e-6 * W);
}

TEST_CASE("free rolling keeps speed constant") {
  const auto p = VehicleParams::jaguar_xj();
  const auto s0 = rolling_state(20.0, p);
  const auto s = integrate(s0, 0.0, surfaces::dry(), 1e-3, 1.0);
  CHECK(std::abs(s.U - 20.0) < 1e-9);
  CHECK(std::abs(s.omega[0] - s0.omega[0]) < 1e-9);
}

TEST_CASE("braking moves load from the rear axle to the front") {
  const auto p = VehicleParams::jaguar_xj();
  const auto s0 = rolling_state(20.0, p);
  const auto rest = suspension_forces(s0, p);
  const auto s = integrate(s0, -1500.0, surfaces::dry(), 1e-3, 0.4);
  const auto loaded = suspension_forces(s, p);
  CHECK(s.U < 20.0);
  CHECK(loaded.front > rest.front);
  CHECK(loaded.rear < rest.rear);
  CHECK(s.pitch < s0.pitch);  // nose dives
}

TEST_CASE("RK4 step halving shows fourth-order convergence") {
  const auto s0 = rolling_state(20.0, VehicleParams::jaguar_xj());
  const double T = 0.2;
  const auto y1 = integrate(s0, -1500.0, surfaces::dry(), 4e-3, T);
  const auto y2 = integrate(s0, -1500.0, surfaces::dry(), 2e-3, T);
  const auto y3 = integrate(s0, -1500.0, surfaces::dry(), 1e-3, T);
  const double order = std::log2(distance(y1, y2) / distance(y2, y3));
  CAPTURE(order);
  CHECK(order >= 4.0);
}

TEST_CASE("stepping is deterministic and rejects bad input") {
  const auto p = VehicleParams::jaguar_xj();
  const auto s0 = rolling_state(20.0, p);
  CHECK(integrate(s0, -2000.0, surfaces::wet(), 1e-3, 0.3) == integrate(s0, -2000.0, surfaces::wet(), 1e-3, 0.3));
  CHECK_THROWS_AS(step(s0, {}, p, surfaces::dry(), 0.0), std::invalid_argument);
}

TEST_CASE("wheel speeds never go negative") {
  const auto p = VehicleParams::jaguar_xj();
  auto s = rolling_state(5.0, p);
  for (int i = 0; i < 400; ++i) {
    s = step(s, WheelTorques::both(-4000.0), p, surfaces::snow(), 2.5e-4);
    CHECK(s.omega[0] >= 0.0);
  }
  CHECK(s.omega[0] == 0.0);
}

TEST_CASE("vehicle parameter validation") {
  auto p = VehicleParams::jaguar_xj();
  CHECK_NOTHROW(p.validate());
  CHECK(p.wheelbase() == doctest::Approx(3.03));
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

}

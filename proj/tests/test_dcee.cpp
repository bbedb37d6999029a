#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "abs_lab/dcee.hpp"

using namespace abs_lab;

namespace {

ParticleEnsemble collapsed(double slip, const MagicParams& theta, std::size_t n = 200) {
  const double R = VehicleParams::jaguar_xj().rolling_radius;
  ParticleEnsemble ens;
  ens.particles.assign(n, AugmentedState{20.0, 20.0 * (1.0 + slip) / R, 20.0 / R, theta});
  ens.weights.assign(n, 1.0 / static_cast<double>(n));
  return ens;
}

std::vector<PredictedForceSample> errors(std::initializer_list<double> e) {
  std::vector<PredictedForceSample> out;
  for (double x : e) out.push_back({x - 1000.0, -1000.0, 1.0});
  return out;
}

}  // namespace

TEST_SUITE("dcee") {

TEST_CASE("cost examples") {
  const std::vector<PredictedForceSample> at_peak(5, {-3000.0, -3000.0, 0.2});
  CHECK(cost(at_peak).value == 0.0);

  const auto constant = errors({-500.0, -500.0, -500.0});
  CHECK(cost(constant).value == 500.0);
  CHECK(cost(constant).variance == 0.0);

  const auto two = errors({-400.0, -600.0});
  CHECK(cost(two).value == 500.0 + 10000.0);
  CHECK(cost(two).mean_error == -500.0);

  CHECK_THROWS_AS(cost(errors({1.0})), std::invalid_argument);
}

TEST_CASE("cost is non-negative") {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    std::vector<PredictedForceSample> s(10);
    for (auto& x : s) x = {rng.normal() * 800.0, -2000.0 + rng.normal() * 300.0, rng.uniform()};
    CHECK(cost(s).value >= 0.0);
  }
}

TEST_CASE("predicted forces") {
  const auto p = VehicleParams::jaguar_xj();
  const double Fz = vertical_loads(-8.0, p).front;

  SUBCASE("collapsed ensemble gives identical samples") {
    const auto ens = collapsed(-0.05, surfaces::dry());
    std::vector<std::size_t> subset(40);
    std::iota(subset.begin(), subset.end(), 0);
    const auto s = predict_forces(ens, subset, -1000.0, 1e-3, p, Fz, 250.0);
    REQUIRE(s.size() == 40);
    for (const auto& x : s) {
      CHECK(x.force == s[0].force);
      CHECK(x.weight == doctest::Approx(1.0 / 40.0));
    }
  }

  SUBCASE("force at the given slip over a vanishing step") {
    const std::size_t idx[] = {0, 1};
    for (double slip : {-0.05, optimal_slip(surfaces::dry())}) {
      const auto ens = collapsed(slip, surfaces::dry());
      const auto s = predict_forces(ens, idx, -1000.0, 1e-12, p, Fz, 250.0);
      const auto& t = surfaces::dry();
      const double x = t.B * slip;
      const double mu = t.D * std::sin(t.C * std::atan(x - t.E * (x - std::atan(x))));
      CHECK(s[0].force == doctest::Approx(mu * Fz).epsilon(1e-9));
      CHECK(s[0].peak_force == doctest::Approx(-1.3 * Fz).epsilon(1e-15));
      CHECK(std::abs(s[0].force) <= std::abs(s[0].peak_force) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("action choice follows the slip") {
  const auto p = VehicleParams::jaguar_xj();
  DceeConfig cfg;
  struct Case {
    double slip;
    double torque;
    bool brake_harder;
  };
  for (const Case& c : {Case{-0.05, -800.0, true}, Case{-0.4, -3000.0, false}}) {
    CAPTURE(c.slip);
    const auto ens = collapsed(c.slip, surfaces::dry());
    DceeController ctrl(cfg, p, 1e-3, 1);
    const auto d = ctrl.select_action(ens, c.torque);

    // Exhaustive evaluation with the same subset and load.
    Rng rng(1);
    const auto subset = stratified_resample(ens.weights, cfg.predicted_observations, rng);
    double best = 1e300;
    double best_tau = 0.0;
    for (std::size_t k = 0; k < cfg.actions.increments.size(); ++k) {
      const double tau = cfg.actions.increments[k];
      const auto s = predict_forces(ens, subset, cfg.actions.apply(c.torque, tau), 1e-3, p, d.front_load, 250.0);
      const double J = cost(s).value;
      CHECK(d.candidate_costs[k] == doctest::Approx(J).epsilon(1e-12));
      if (J < best) {
        best = J;
        best_tau = tau;
      }
    }
    CHECK(d.increment == best_tau);
    if (c.brake_harder) {
      CHECK(d.increment < 0.0);
    } else {
      CHECK(d.increment > 0.0);
    }
    CHECK(d.torque == cfg.actions.apply(c.torque, d.increment));
  }
}

TEST_CASE("ties go to the hold action") {
  auto ens = collapsed(0.0, surfaces::wet());
  for (auto& x : ens.particles) x.U = x.omega_front = x.omega_rear = 0.0;
  DceeConfig cfg;
  cfg.hold_speed = 0.0;
  DceeController ctrl(cfg, VehicleParams::jaguar_xj(), 1e-3, 2);
  const auto d = ctrl.select_action(ens, -1500.0);
  for (double J : d.candidate_costs) CHECK(J == d.candidate_costs.front());
  CHECK(d.increment == 0.0);
  CHECK(d.torque == -1500.0);
  CHECK_FALSE(d.held);
}

TEST_CASE("below the hold speed the torque is kept") {
  auto ens = collapsed(-0.05, surfaces::dry());
  for (auto& x : ens.particles) x.U = 1.0;
  DceeController ctrl(DceeConfig{}, VehicleParams::jaguar_xj(), 1e-3, 2);
  const auto d = ctrl.select_action(ens, -900.0);
  CHECK(d.held);
  CHECK(d.torque == -900.0);
}

TEST_CASE("selection is pure and ignores the weight scale") {
  const auto p = VehicleParams::jaguar_xj();
  ParticleEnsemble ens;
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const double slip = -0.02 - 0.2 * rng.uniform();
    ens.particles.push_back({20.0, 20.0 * (1.0 + slip) / p.rolling_radius, 20.0 / p.rolling_radius,
                             {rng.uniform(4, 21), rng.uniform(1.26, 1.6), rng.uniform(0.2, 1.6), rng.uniform(-12, 2)}});
    ens.weights.push_back(rng.uniform());
  }
  const double total = std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0);
  for (double& w : ens.weights) w /= total;
  const auto copy = ens;

  DceeController a(DceeConfig{}, p, 1e-3, 5);
  const auto da = a.select_action(ens, -1200.0);
  CHECK(ens.particles == copy.particles);
  CHECK(ens.weights == copy.weights);

  for (double scale : {3.0, 0.25}) {
    auto scaled = ens;
    for (double& w : scaled.weights) w *= scale;
    DceeController b(DceeConfig{}, p, 1e-3, 5);
    CHECK(b.select_action(scaled, -1200.0).increment == da.increment);
  }
}

TEST_CASE("action set") {
  ActionSet a;
  CHECK(a.apply(-3900.0, -400.0) == -4000.0);
  CHECK(a.apply(-100.0, 400.0) == 0.0);
  CHECK(a.apply(-1000.0, 50.0) == -950.0);
  a.increments = {-50.0, 50.0};
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
}

}

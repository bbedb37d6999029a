#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "abs_lab/tyre.hpp"

using namespace abs_lab;

namespace {

// Written out independently of the library.
double mf(double k, double B, double C, double D, double E) {
  const double x = B * k;
  return D * std::sin(C * std::atan(x - E * (x - std::atan(x))));
}

struct GridPeak {
  double kappa;
  double mu;
};

GridPeak grid_peak(const MagicParams& t, double step) {
  GridPeak best{0.0, 0.0};
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) {
    const double k = -1.0 + i * step;
    const double mu = mf(k, t.B, t.C, t.D, t.E);
    if (mu < best.mu) best = {k, mu};
  }
  return best;
}

}  // namespace

TEST_SUITE("tyre") {

TEST_CASE("zero slip gives zero friction") {
  for (auto t : {surfaces::dry(), surfaces::wet(), surfaces::snow(), MagicParams{13.0, 1.3, 0.7, -4.0}}) {
    CHECK(friction(0.0, t) == 0.0);
  }
}

TEST_CASE("peak magnitude and optimal slip match the surface table") {
  struct Row {
    MagicParams theta;
    double kappa_star;
  };
  for (const Row& r : {Row{surfaces::dry(), -0.15}, Row{surfaces::wet(), -0.104}, Row{surfaces::snow(), -0.18}}) {
    CAPTURE(r.theta.D);
    const auto g = grid_peak(r.theta, 1e-5);
    CHECK(std::abs(-g.mu - r.theta.D) < 1e-6);
    CHECK(std::abs(g.kappa - r.kappa_star) < 1e-3);
    CHECK(std::abs(optimal_slip(r.theta) - r.kappa_star) < 1e-3);
    CHECK(std::abs(optimal_slip(r.theta) - g.kappa) < 1e-4);
    CHECK(std::abs(friction(optimal_slip(r.theta), r.theta) + r.theta.D) < 1e-6);
  }
}

TEST_CASE("friction is odd and bounded by the peak factor") {
  const auto t = surfaces::dry();
  for (int i = 0; i <= 2000; ++i) {
    const double k = -1.0 + i * 1e-3;
    CHECK(friction(-k, t) == doctest::Approx(-friction(k, t)).epsilon(1e-14));
    CHECK(std::abs(friction(k, t)) <= t.D + 1e-12);
    CHECK(friction(k, t) == doctest::Approx(mf(k, t.B, t.C, t.D, t.E)).epsilon(1e-14));
  }
}

TEST_CASE("analytic slope agrees with central differences") {
  const auto t = surfaces::wet();
  for (double k : {-0.9, -0.3, -0.104, -0.05, -0.01, 0.0, 0.02}) {
    const double h = 1e-6;
    const double fd = (friction(k + h, t) - friction(k - h, t)) / (2.0 * h);
    CHECK(friction_slope(k, t) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("slip ratio") {
  CHECK(slip_ratio(20.0 / 0.29, 20.0, 0.29) == doctest::Approx(0.0));
  CHECK(slip_ratio(0.0, 10.0, 0.29) == -1.0);
  CHECK(slip_ratio(17.0 / 0.29, 20.0, 0.29) == doctest::Approx(-0.15));
  CHECK_THROWS_AS(slip_ratio(1.0, 0.0, 0.29), std::domain_error);
  CHECK_THROWS_AS(slip_ratio(1.0, -1.0, 0.29), std::domain_error);
}

TEST_CASE("road schedule lookup is right-continuous") {
  RoadSchedule road(surfaces::dry(), "dry");
  road.add(0.5, surfaces::wet(), "wet");
  CHECK(road_at(0.49, road) == surfaces::dry());
  CHECK(road_at(0.5, road) == surfaces::wet());
  CHECK(road_at(100.0, road) == surfaces::wet());
  CHECK(road_at(0.0, road) == surfaces::dry());

  CHECK_THROWS_AS(road.add(0.5, surfaces::snow()), std::invalid_argument);
  RoadSchedule late;
  CHECK_THROWS_AS(late.add(0.1, surfaces::snow()), std::invalid_argument);
  CHECK_THROWS(RoadSchedule{}.at(0.0));
}

TEST_CASE("surface presets by name") {
  CHECK(surfaces::by_name("dry") == surfaces::dry());
  CHECK(surfaces::by_name("snow") == surfaces::snow());
  CHECK_FALSE(surfaces::by_name("ice").has_value());
}

}

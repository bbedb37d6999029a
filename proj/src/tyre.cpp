#include "abs_lab/tyre.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abs_lab {

namespace surfaces {

MagicParams dry() { return {5.0, 1.4601, 1.3, -10.3522}; }
MagicParams wet() { return {10.695, 1.4, 0.8, -3.5}; }
MagicParams snow() { return {20.0, 1.5354, 0.3, 0.8525}; }

std::optional<MagicParams> by_name(std::string_view name) {
  if (name == "dry") return dry();
  if (name == "wet") return wet();
  if (name == "snow") return snow();
  return std::nullopt;
}

}  // namespace surfaces

double friction(double kappa, const MagicParams& theta) {
  const double bk = theta.B * kappa;
  const double phi = bk - theta.E * (bk - std::atan(bk));
  return theta.D * std::sin(theta.C * std::atan(phi));
}

double friction_slope(double kappa, const MagicParams& theta) {
  const double bk = theta.B * kappa;
  const double phi = bk - theta.E * (bk - std::atan(bk));
  const double dphi = theta.B - theta.E * (theta.B - theta.B / (1.0 + bk * bk));
  return theta.D * std::cos(theta.C * std::atan(phi)) * theta.C / (1.0 + phi * phi) * dphi;
}

double slip_ratio(double omega, double speed, double radius) {
  if (!(speed > 0.0)) {
    throw std::domain_error("slip ratio undefined for non-positive speed");
  }
  return (omega * radius - speed) / speed;
}

double optimal_slip(const MagicParams& theta) {
  // Coarse scan locates the basin, golden section polishes it.
  constexpr int kGrid = 1000;
  int best = 0;
  double best_mu = friction(-1.0, theta);
  for (int i = 1; i <= kGrid; ++i) {
    const double k = -1.0 + static_cast<double>(i) / kGrid;
    const double mu = friction(k, theta);
    if (mu < best_mu) {
      best_mu = mu;
      best = i;
    }
  }
  double lo = -1.0 + static_cast<double>(std::max(best - 1, 0)) / kGrid;
  double hi = -1.0 + static_cast<double>(std::min(best + 1, kGrid)) / kGrid;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = friction(x1, theta);
  double f2 = friction(x2, theta);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = friction(x1, theta);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = friction(x2, theta);
    }
  }
  return 0.5 * (lo + hi);
}

RoadSchedule::RoadSchedule(MagicParams theta, std::string label) { add(0.0, theta, std::move(label)); }

void RoadSchedule::add(double start, MagicParams theta, std::string label) {
  if (segments_.empty()) {
    if (start != 0.0) throw std::invalid_argument("road schedule must start at t = 0");
  } else if (!(start > segments_.back().start)) {
    throw std::invalid_argument("road schedule switch times must be strictly increasing");
  }
  segments_.push_back({start, theta, std::move(label)});
}

const MagicParams& RoadSchedule::at(double t) const {
  if (segments_.empty()) throw std::logic_error("empty road schedule");
  const Segment* current = &segments_.front();
  for (const auto& seg : segments_) {
    if (seg.start <= t) current = &seg;
    else break;
  }
  return current->theta;
}

}  // namespace abs_lab

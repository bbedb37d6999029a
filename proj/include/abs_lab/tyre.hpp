#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abs_lab {

/// Magic Formula coefficients: stiffness B, shape C, peak D, curvature E.
struct MagicParams {
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double E = 0.0;

  friend bool operator==(const MagicParams&, const MagicParams&) = default;
};

namespace surfaces {
MagicParams dry();
MagicParams wet();
MagicParams snow();
/// Looks up "dry", "wet" or "snow".
std::optional<MagicParams> by_name(std::string_view name);
}  // namespace surfaces

/// Longitudinal friction coefficient mu(kappa). Negative under braking.
double friction(double kappa, const MagicParams& theta);

/// d mu / d kappa, analytic.
double friction_slope(double kappa, const MagicParams& theta);

/// Practical slip ratio (omega R - U) / U. Throws std::domain_error for U <= 0.
double slip_ratio(double omega, double speed, double radius);

/// Slip in [-1, 0] giving the most negative (strongest braking) friction.
double optimal_slip(const MagicParams& theta);

/// Piecewise-constant road surface over time, right-continuous at switches.
class RoadSchedule {
 public:
  struct Segment {
    double start = 0.0;
    MagicParams theta;
    std::string label;
  };

  RoadSchedule() = default;
  explicit RoadSchedule(MagicParams theta, std::string label = {});

  /// Appends a segment. The first segment must start at t = 0 and later
  /// starts must be strictly increasing; violations throw std::invalid_argument.
  void add(double start, MagicParams theta, std::string label = {});

  const MagicParams& at(double t) const;
  bool empty() const { return segments_.empty(); }
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

inline const MagicParams& road_at(double t, const RoadSchedule& schedule) { return schedule.at(t); }

}  // namespace abs_lab

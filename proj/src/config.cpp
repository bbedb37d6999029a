#include "abs_lab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace abs_lab {

namespace {

using nlohmann::json;

// Reads fields out of one JSON object and remembers which keys were used, so
// leftovers can be reported.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

MagicParams parse_theta(const json& j, const std::string& where) {
  MagicParams theta;
  Fields f(j, where);
  for (const char* key : {"B", "C", "D", "E"}) {
    if (!j.contains(key)) throw ConfigError(where + ": missing " + key);
  }
  f.get("B", theta.B);
  f.get("C", theta.C);
  f.get("D", theta.D);
  f.get("E", theta.E);
  f.finish();
  return theta;
}

RoadSchedule parse_road(const json& j) {
  RoadSchedule road;
  if (j.is_string()) {
    auto theta = surfaces::by_name(j.get<std::string>());
    if (!theta) throw ConfigError("road: unknown surface '" + j.get<std::string>() + "'");
    road.add(0.0, *theta, j.get<std::string>());
    return road;
  }
  if (!j.is_array()) throw ConfigError("road: expected a surface name or a list of segments");
  if (j.empty()) throw ConfigError("road: schedule is empty");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "road[" + std::to_string(i) + "]";
    Fields f(j[i], where);
    double start = 0.0;
    f.get("t", start);
    std::string surface;
    f.get("surface", surface);
    const json* theta_json = f.child("theta");
    f.finish();
    if (surface.empty() == (theta_json == nullptr)) {
      throw ConfigError(where + ": give exactly one of 'surface' or 'theta'");
    }
    MagicParams theta;
    if (theta_json) {
      theta = parse_theta(*theta_json, where + ".theta");
    } else {
      auto preset = surfaces::by_name(surface);
      if (!preset) throw ConfigError(where + ": unknown surface '" + surface + "'");
      theta = *preset;
    }
    try {
      road.add(start, theta, surface);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return road;
}

void parse_vehicle(const json& j, VehicleParams& v) {
  Fields f(j, "vehicle");
  f.get("mass", v.mass);
  f.get("pitch_inertia", v.pitch_inertia);
  f.get("wheel_inertia", v.wheel_inertia);
  f.get("rolling_radius", v.rolling_radius);
  f.get("k_front", v.k_front);
  f.get("k_rear", v.k_rear);
  f.get("c_front", v.c_front);
  f.get("c_rear", v.c_rear);
  f.get("a", v.a);
  f.get("b", v.b);
  f.get("x_g", v.x_g);
  f.get("y_g", v.y_g);
  f.get("z_g", v.z_g);
  f.finish();
}

void parse_dcee(const json& j, DceeConfig& d) {
  Fields f(j, "dcee");
  f.get("increments", d.actions.increments);
  f.get("torque_min", d.actions.torque_min);
  f.get("torque_max", d.actions.torque_max);
  f.get("predicted_observations", d.predicted_observations);
  f.get("force_sigma", d.force_sigma);
  f.get("hold_speed", d.hold_speed);
  std::string uncertainty = d.uncertainty == UncertaintyModel::posterior ? "posterior" : "marginal";
  f.get("uncertainty", uncertainty);
  if (uncertainty == "posterior") {
    d.uncertainty = UncertaintyModel::posterior;
  } else if (uncertainty == "marginal") {
    d.uncertainty = UncertaintyModel::marginal;
  } else {
    throw ConfigError("dcee.uncertainty: expected 'posterior' or 'marginal'");
  }
  f.finish();
}

void parse_inner(const json& j, SlipTrackingConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("gain", c.gain);
  f.get("integral_gain", c.integral_gain);
  f.get("torque_min", c.torque_min);
  f.get("torque_max", c.torque_max);
  f.finish();
}

void parse_filters(const json& j, SensorFilterConfig& c, const std::string& where) {
  Fields f(j, where);
  f.get("body_cutoff_hz", c.body_cutoff_hz);
  f.get("wheel_cutoff_hz", c.wheel_cutoff_hz);
  f.finish();
}

void parse_csp(const json& j, CspConfig& c) {
  Fields f(j, "csp");
  f.get("dither_amplitude", c.dither_amplitude);
  f.get("dither_hz", c.dither_hz);
  f.get("adaptation_gain", c.adaptation_gain);
  f.get("washout_hz", c.washout_hz);
  f.get("objective_cutoff_hz", c.objective_cutoff_hz);
  f.get("derivative_window", c.derivative_window);
  f.get("initial_slip", c.initial_slip);
  f.get("min_slip", c.min_slip);
  f.get("max_slip", c.max_slip);
  if (const json* inner = f.child("inner")) parse_inner(*inner, c.inner, "csp.inner");
  if (const json* filters = f.child("filters")) parse_filters(*filters, c.filters, "csp.filters");
  f.finish();
}

void parse_bisection(const json& j, BisectionConfig& c) {
  Fields f(j, "bisection");
  f.get("lower", c.lower);
  f.get("upper", c.upper);
  f.get("tolerance", c.tolerance);
  f.get("probe_offset", c.probe_offset);
  f.get("settle_time", c.settle_time);
  f.get("measure_time", c.measure_time);
  if (const json* inner = f.child("inner")) parse_inner(*inner, c.inner, "bisection.inner");
  if (const json* filters = f.child("filters")) parse_filters(*filters, c.filters, "bisection.filters");
  f.finish();
}

void parse_filter(const json& j, FilterOptions& o) {
  Fields f(j, "filter");
  std::string scheme = o.scheme == ResamplingScheme::systematic ? "systematic" : "stratified";
  f.get("resampling", scheme);
  if (scheme == "systematic") {
    o.scheme = ResamplingScheme::systematic;
  } else if (scheme == "stratified") {
    o.scheme = ResamplingScheme::stratified;
  } else {
    throw ConfigError("filter.resampling: expected 'systematic' or 'stratified'");
  }
  f.get("regularize", o.regularize);
  f.get("mcmc", o.mcmc);
  f.get("peak_floor", o.peak_floor);
  f.get("theta_spread_floor", o.theta_spread_floor);
  f.get("confine_theta", o.confine_theta);
  f.get("state_noise_std", o.state_noise_std);
  f.finish();
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  ScenarioConfig c;
  Fields f(j, "config");
  f.get("name", c.name);
  if (j.contains("initial_speed") && j.contains("initial_speed_mph")) {
    throw ConfigError("config: give initial_speed or initial_speed_mph, not both");
  }
  f.get("initial_speed", c.initial_speed);
  if (j.contains("initial_speed_mph")) {
    double mph = 0.0;
    f.get("initial_speed_mph", mph);
    c.initial_speed = mph * kMetersPerSecondPerMph;
  } else {
    f.child("initial_speed_mph");
  }
  if (const json* road = f.child("road")) c.road = parse_road(*road);

  std::string controller = to_string(c.controller);
  f.get("controller", controller);
  auto kind = controller_from_string(controller);
  if (!kind) throw ConfigError("config.controller: unknown controller '" + controller + "'");
  c.controller = *kind;

  f.get("particles", c.particles);
  f.get("seed", c.seed);
  f.get("dt", c.dt);
  f.get("plant_substeps", c.plant_substeps);
  f.get("sensor_variance", c.sensor.variance);
  f.get("retrogressive", c.retrogressive);
  f.get("timeout", c.timeout);
  f.get("stop_speed", c.stop_speed);
  f.get("lock_speed", c.lock_speed);
  f.get("output", c.output);
  if (const json* v = f.child("vehicle")) parse_vehicle(*v, c.vehicle);
  if (const json* fo = f.child("filter")) parse_filter(*fo, c.filter);
  if (const json* d = f.child("dcee")) parse_dcee(*d, c.dcee);
  if (const json* s = f.child("csp")) parse_csp(*s, c.csp);
  if (const json* b = f.child("bisection")) parse_bisection(*b, c.bisection);
  f.finish();

  c.csp.dt = c.dt;
  c.bisection.dt = c.dt;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const ScenarioConfig& c) {
  json road = json::array();
  for (const auto& seg : c.road.segments()) {
    json entry{{"t", seg.start}};
    if (!seg.label.empty() && surfaces::by_name(seg.label) == seg.theta) {
      entry["surface"] = seg.label;
    } else {
      entry["theta"] = {{"B", seg.theta.B}, {"C", seg.theta.C}, {"D", seg.theta.D}, {"E", seg.theta.E}};
    }
    road.push_back(entry);
  }
  const auto& v = c.vehicle;
  auto inner = [](const SlipTrackingConfig& s) {
    return json{{"gain", s.gain}, {"integral_gain", s.integral_gain}, {"torque_min", s.torque_min},
                {"torque_max", s.torque_max}};
  };
  auto filters = [](const SensorFilterConfig& s) {
    return json{{"body_cutoff_hz", s.body_cutoff_hz}, {"wheel_cutoff_hz", s.wheel_cutoff_hz}};
  };
  json j{
      {"name", c.name},
      {"initial_speed", c.initial_speed},
      {"road", road},
      {"controller", to_string(c.controller)},
      {"particles", c.particles},
      {"seed", c.seed},
      {"dt", c.dt},
      {"plant_substeps", c.plant_substeps},
      {"sensor_variance", c.sensor.variance},
      {"retrogressive", c.retrogressive},
      {"timeout", c.timeout},
      {"stop_speed", c.stop_speed},
      {"lock_speed", c.lock_speed},
      {"output", c.output},
      {"vehicle",
       {{"mass", v.mass}, {"pitch_inertia", v.pitch_inertia}, {"wheel_inertia", v.wheel_inertia},
        {"rolling_radius", v.rolling_radius}, {"k_front", v.k_front}, {"k_rear", v.k_rear}, {"c_front", v.c_front},
        {"c_rear", v.c_rear}, {"a", v.a}, {"b", v.b}, {"x_g", v.x_g}, {"y_g", v.y_g}, {"z_g", v.z_g}}},
      {"filter",
       {{"resampling", c.filter.scheme == ResamplingScheme::systematic ? "systematic" : "stratified"},
        {"regularize", c.filter.regularize}, {"mcmc", c.filter.mcmc}, {"peak_floor", c.filter.peak_floor},
        {"theta_spread_floor", c.filter.theta_spread_floor},
        {"confine_theta", c.filter.confine_theta}, {"state_noise_std", c.filter.state_noise_std}}},
      {"dcee",
       {{"increments", c.dcee.actions.increments}, {"torque_min", c.dcee.actions.torque_min},
        {"torque_max", c.dcee.actions.torque_max}, {"predicted_observations", c.dcee.predicted_observations},
        {"force_sigma", c.dcee.force_sigma}, {"hold_speed", c.dcee.hold_speed},
        {"uncertainty", c.dcee.uncertainty == UncertaintyModel::posterior ? "posterior" : "marginal"}}},
      {"csp",
       {{"dither_amplitude", c.csp.dither_amplitude}, {"dither_hz", c.csp.dither_hz},
        {"adaptation_gain", c.csp.adaptation_gain}, {"washout_hz", c.csp.washout_hz},
        {"objective_cutoff_hz", c.csp.objective_cutoff_hz}, {"derivative_window", c.csp.derivative_window},
        {"initial_slip", c.csp.initial_slip}, {"min_slip", c.csp.min_slip}, {"max_slip", c.csp.max_slip},
        {"inner", inner(c.csp.inner)}, {"filters", filters(c.csp.filters)}}},
      {"bisection",
       {{"lower", c.bisection.lower}, {"upper", c.bisection.upper}, {"tolerance", c.bisection.tolerance},
        {"probe_offset", c.bisection.probe_offset}, {"settle_time", c.bisection.settle_time},
        {"measure_time", c.bisection.measure_time}, {"inner", inner(c.bisection.inner)},
        {"filters", filters(c.bisection.filters)}}},
  };
  return j.dump(2);
}

}  // namespace abs_lab

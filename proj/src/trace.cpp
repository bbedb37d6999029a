#include "abs_lab/trace.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace abs_lab {

const std::vector<std::string>& trace_header() {
  static const std::vector<std::string> header{
      "t",         "U_true",    "omega_f_true", "omega_r_true", "U_meas", "omega_f_meas", "omega_r_meas",
      "U_est",     "omega_f_est", "omega_r_est", "B_est",      "C_est",  "D_est",        "E_est",
      "D_min",     "D_max",     "kappa_f",      "mu_f_true",    "torque", "J",            "P_pred",
      "N_eff",     "resampled", "retro",        "lock"};
  return header;
}

const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> header{
      "name",           "controller",        "seed",          "initial_speed",      "road",
      "particles",      "dt",                "retrogressive", "stopped",           "aborted",       "stopping_time",      "stopping_distance",
      "lock_events",    "steady_mu_error",   "retro_events",  "initial_uncertainty", "max_rel_error_U",
      "max_rel_error_omega_f", "max_rel_error_omega_r", "steps", "wall_time",        "error"};
  return header;
}

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& name) {
  return dir / (name + "_trace.csv");
}

std::filesystem::path metrics_path(const std::filesystem::path& dir, const std::string& name) {
  return dir / (name + "_metrics.csv");
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

template <typename Seq>
void write_row(std::ostream& out, const Seq& cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  auto out = open_for_write(path);
  write_row(out, trace_header());
  for (const auto& r : rows) {
    out << r.t << ',' << r.U_true << ',' << r.omega_f_true << ',' << r.omega_r_true << ',' << r.U_meas << ','
        << r.omega_f_meas << ',' << r.omega_r_meas << ',' << r.U_est << ',' << r.omega_f_est << ','
        << r.omega_r_est << ',' << r.B_est << ',' << r.C_est << ',' << r.D_est << ',' << r.E_est << ','
        << r.D_min << ',' << r.D_max << ',' << r.kappa_f << ',' << r.mu_f_true << ',' << r.torque << ','
        << r.J << ',' << r.P_pred << ',' << r.N_eff << ',' << (r.resampled ? 1 : 0) << ','
        << (r.retro ? 1 : 0) << ',' << (r.lock ? 1 : 0) << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows) {
  auto out = open_for_write(path);
  write_row(out, metrics_header());
  for (const auto& m : rows) {
    out << quote(m.name) << ',' << to_string(m.controller) << ',' << m.seed << ',' << m.initial_speed << ','
        << quote(m.road) << ',' << m.particles << ',' << m.dt << ',' << (m.retrogressive ? 1 : 0) << ','
        << (m.stopped ? 1 : 0) << ',' << (m.aborted ? 1 : 0) << ','
        << m.stopping_time << ',' << m.stopping_distance << ',' << m.lock_events << ',' << m.steady_mu_error
        << ',' << m.retro_events << ',' << m.initial_uncertainty << ',' << m.max_rel_error_U << ','
        << m.max_rel_error_omega_f << ',' << m.max_rel_error_omega_r << ',' << m.steps << ',' << m.wall_time
        << ',' << quote(m.error) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace " + path.string());

  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  if (names != trace_header()) throw std::runtime_error("trace header mismatch in " + path.string());

  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != names.size()) throw std::runtime_error("malformed trace row in " + path.string());
    TraceRow r;
    std::size_t i = 0;
    for (double* f : {&r.t, &r.U_true, &r.omega_f_true, &r.omega_r_true, &r.U_meas, &r.omega_f_meas,
                      &r.omega_r_meas, &r.U_est, &r.omega_f_est, &r.omega_r_est, &r.B_est, &r.C_est, &r.D_est,
                      &r.E_est, &r.D_min, &r.D_max, &r.kappa_f, &r.mu_f_true, &r.torque, &r.J, &r.P_pred,
                      &r.N_eff}) {
      *f = v[i++];
    }
    r.resampled = v[i++] != 0.0;
    r.retro = v[i++] != 0.0;
    r.lock = v[i++] != 0.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace abs_lab

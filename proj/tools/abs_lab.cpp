// Command-line front end: single runs, parameter sweeps and controller
// comparisons.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "abs_lab/config.hpp"
#include "abs_lab/scenario.hpp"
#include "abs_lab/trace.hpp"

namespace fs = std::filesystem;
using namespace abs_lab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kAborted = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string controller;
  std::optional<double> speed;
  std::optional<double> speed_mph;
  std::string surface;
  std::string out;
  std::optional<std::size_t> particles;
  std::optional<bool> retrogressive;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_controller) {
  cmd->add_option("--config", o.config, "JSON scenario file");
  cmd->add_option("--seed", o.seed, "scenario seed");
  if (with_controller) {
    cmd->add_option("--controller", o.controller, "dcee, csp or bisection")
        ->check(CLI::IsMember({"dcee", "csp", "bisection"}));
  }
  auto* speed = cmd->add_option("--speed", o.speed, "initial speed, m/s");
  cmd->add_option("--speed-mph", o.speed_mph, "initial speed, mph")->excludes(speed);
  cmd->add_option("--surface", o.surface, "constant road surface: dry, wet or snow")
      ->check(CLI::IsMember({"dry", "wet", "snow"}));
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--particles", o.particles, "particle count");
  cmd->add_option("--retrogressive", o.retrogressive, "enable retrogressive resampling (true/false)");
}

std::string default_out_dir() {
  if (const char* env = std::getenv("ABS_LAB_OUT_DIR"); env && *env) return env;
  return "abs_lab_out";
}

// Loads the base configuration and applies command-line overrides on top.
ScenarioConfig resolve(const Overrides& o) {
  ScenarioConfig c = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.controller.empty()) c.controller = *controller_from_string(o.controller);
  if (o.speed) c.initial_speed = *o.speed;
  if (o.speed_mph) c.initial_speed = *o.speed_mph * kMetersPerSecondPerMph;
  if (!o.surface.empty()) c.road = RoadSchedule(*surfaces::by_name(o.surface), o.surface);
  if (o.particles) c.particles = *o.particles;
  if (o.retrogressive) c.retrogressive = *o.retrogressive;
  if (!o.out.empty()) {
    c.output = o.out;
  } else if (c.output.empty()) {
    c.output = default_out_dir();
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void write_echo(const ScenarioConfig& c) {
  fs::create_directories(c.output);
  std::ofstream(fs::path(c.output) / (c.name + "_config.json")) << config_to_json(c) << '\n';
}

void print_summary(const RunMetrics& m) {
  std::printf("%-24s %-10s seed=%-6llu U0=%7.3f  t_stop=%8.4f s  d_stop=%8.3f m  locks=%d  retro=%d  %s\n",
              m.name.c_str(), to_string(m.controller).c_str(), static_cast<unsigned long long>(m.seed),
              m.initial_speed, m.stopping_time, m.stopping_distance, m.lock_events, m.retro_events,
              m.aborted ? ("ABORTED: " + m.error).c_str() : (m.stopped ? "stopped" : "timeout"));
}

int cmd_run(const Overrides& o, int verbosity) {
  ScenarioConfig c = resolve(o);
  write_echo(c);
  const RunResult result = run(c);
  if (verbosity > 0) print_summary(result.metrics);
  if (verbosity > 1) {
    std::cout << "trace:   " << trace_path(c.output, c.name).string() << '\n'
              << "metrics: " << metrics_path(c.output, c.name).string() << '\n';
  }
  return result.metrics.aborted ? kAborted : kOk;
}

int cmd_sweep(const Overrides& o, const std::vector<double>& speeds_mph, const std::vector<std::string>& roads,
              const std::vector<std::uint64_t>& seeds, unsigned workers, bool traces, int verbosity) {
  const ScenarioConfig base = resolve(o);
  std::vector<ScenarioConfig> configs;
  for (const auto& road : roads) {
    for (double mph : speeds_mph) {
      for (auto seed : seeds) {
        ScenarioConfig c = base;
        c.road = RoadSchedule(*surfaces::by_name(road), road);
        c.initial_speed = mph * kMetersPerSecondPerMph;
        c.seed = seed;
        c.name = base.name + "_" + road + "_" + std::to_string(static_cast<int>(mph)) + "mph_s" +
                 std::to_string(seed);
        if (!traces) c.output.clear();
        c.validate();
        configs.push_back(std::move(c));
      }
    }
  }
  write_echo(base);
  const auto metrics = sweep(configs, workers);
  write_metrics_csv(metrics_path(base.output, base.name + "_sweep"), metrics);
  bool aborted = false;
  for (const auto& m : metrics) {
    if (verbosity > 0) print_summary(m);
    aborted = aborted || m.aborted;
  }
  return aborted ? kAborted : kOk;
}

int cmd_compare(const Overrides& o, unsigned workers, int verbosity) {
  const ScenarioConfig base = resolve(o);
  std::vector<ScenarioConfig> configs;
  for (auto kind : {ControllerKind::dcee, ControllerKind::csp, ControllerKind::bisection}) {
    ScenarioConfig c = base;
    c.controller = kind;
    c.name = base.name + "_" + to_string(kind);
    configs.push_back(std::move(c));
  }
  write_echo(base);
  const auto metrics = sweep(configs, workers);
  write_metrics_csv(metrics_path(base.output, base.name + "_compare"), metrics);

  const RunMetrics& ref = metrics.front();
  std::printf("%-10s %12s %12s %12s %12s %8s\n", "controller", "t_stop [s]", "d_stop [m]", "dt vs dcee",
              "dd vs dcee", "locks");
  bool aborted = false;
  for (const auto& m : metrics) {
    std::printf("%-10s %12.4f %12.3f %+11.1f%% %+11.1f%% %8d\n", to_string(m.controller).c_str(), m.stopping_time,
                m.stopping_distance, 100.0 * (m.stopping_time - ref.stopping_time) / ref.stopping_time,
                100.0 * (m.stopping_distance - ref.stopping_distance) / ref.stopping_distance, m.lock_events);
    aborted = aborted || m.aborted;
    if (m.aborted && verbosity > 0) std::fprintf(stderr, "%s aborted: %s\n", m.name.c_str(), m.error.c_str());
  }
  return aborted ? kAborted : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABS braking lab: particle-filter dual control against extremum-seeking baselines"};
  app.require_subcommand(1);
  app.fallthrough();
  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "more output (repeatable)");
  app.add_flag("-q,--quiet", quiet, "no summary output");

  Overrides run_opts, sweep_opts, compare_opts;
  auto* run_cmd = app.add_subcommand("run", "run one scenario and write its trace and metrics");
  add_common(run_cmd, run_opts, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of speeds, surfaces and seeds");
  add_common(sweep_cmd, sweep_opts, true);
  std::vector<double> speeds{10, 30, 50, 100};
  std::vector<std::string> roads{"dry", "wet", "snow"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool traces = false;
  sweep_cmd->add_option("--speeds-mph", speeds, "initial speeds, mph");
  sweep_cmd->add_option("--surfaces", roads, "road surfaces")->check(CLI::IsMember({"dry", "wet", "snow"}));
  sweep_cmd->add_option("--seeds", seeds, "seeds");
  sweep_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--traces", traces, "also write one trace per run");

  auto* compare_cmd = app.add_subcommand("compare", "run dcee, csp and bisection on one scenario");
  add_common(compare_cmd, compare_opts, false);
  compare_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() != 0) std::cerr << app.help();
    return kConfigError;
  }

  const int verbosity = quiet ? 0 : 1 + verbose;
  try {
    if (*run_cmd) return cmd_run(run_opts, verbosity);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, speeds, roads, seeds, workers, traces, verbosity);
    return cmd_compare(compare_opts, workers, verbosity);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAborted;
  }
}

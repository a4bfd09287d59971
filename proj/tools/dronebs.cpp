// dronebs: batch front-end for sweep planning, single simulation runs and
// Monte Carlo comparisons.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure. Errors
// print one line on stderr: "dronebs: <kind>: <reason>".

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dronebs/config.hpp"
#include "dronebs/io.hpp"
#include "dronebs/simulation.hpp"
#include "dronebs/sweep_planner.hpp"

namespace fs = std::filesystem;
using namespace dronebs;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::string> algorithm;
  std::optional<double> r_e;
  std::optional<std::string> densities;
  std::optional<int> replications;
  std::optional<std::string> estimate_mode;
  std::optional<double> sigma;
  std::optional<unsigned> threads;
  bool trace = false;
  bool table3 = false;
};

ExperimentConfig load(const Options& opt) {
  ExperimentConfig cfg;
  if (opt.table3) cfg.sim = table3_config();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot read config file '" + opt.config_path + "'");
    cfg = parse_config(in, cfg);
  }
  if (opt.seed) cfg.sim.seed = *opt.seed;
  if (opt.algorithm) cfg.sim.algorithm = parse_algorithm(*opt.algorithm);
  if (opt.r_e) cfg.sim.r_e = *opt.r_e;
  if (opt.densities) apply_setting(cfg, "densities_per_km2", *opt.densities);
  if (opt.replications) cfg.replications = *opt.replications;
  if (opt.estimate_mode) cfg.sim.estimate_mode = parse_estimate_mode(*opt.estimate_mode);
  if (opt.sigma) cfg.sim.tdoa_sigma = *opt.sigma;
  if (opt.threads) cfg.threads = *opt.threads;
  return cfg;
}

/// Output file opened for writing; throws on failure.
std::ofstream open_out(const fs::path& dir, const char* name) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
  return out;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  }
}

int cmd_plan(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const SimConfig& s = cfg.sim;
  SimConfig check = s;
  check.algorithm = Algorithm::proposed;
  validate(check);
  const SweepPlan plan = plan_sweep(s.polygon, s.proportions, make_fleets(s), s.v);
  prepare_out_dir(out_dir);
  auto dec = open_out(out_dir, "decomposition.csv");
  io::write_decomposition(dec, plan.decomposition);
  auto wp = open_out(out_dir, "waypoints.csv");
  io::write_waypoints(wp, plan);
  if (plan.scale_warning) {
    std::cerr << "dronebs: warning: operating area is small relative to the fleet overlap area\n";
  }
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, bool want_trace) {
  validate(cfg.sim);
  std::vector<TraceRow> trace;
  const RunResult result = run(cfg.sim, want_trace ? &trace : nullptr);
  prepare_out_dir(out_dir);
  auto metrics = open_out(out_dir, "metrics.csv");
  io::write_metrics(metrics, {result.metrics});
  auto deployment = open_out(out_dir, "deployment.csv");
  io::write_deployment(deployment, result.plan);
  if (cfg.sim.algorithm == Algorithm::proposed) {
    auto estimates = open_out(out_dir, "estimates.csv");
    io::write_estimates(estimates, result.estimates);
  }
  if (want_trace) {
    auto out = open_out(out_dir, "trace.csv");
    io::write_trace(out, trace);
  }
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  SimConfig check = cfg.sim;
  check.algorithm = Algorithm::proposed;
  validate(check);
  const auto rows = run_comparison(cfg.sim, cfg.densities_per_km2, cfg.replications, cfg.threads);
  prepare_out_dir(out_dir);
  auto comparison = open_out(out_dir, "comparison.csv");
  io::write_metrics(comparison, rows);
  auto curves = open_out(out_dir, "curves.csv");
  io::write_curves(curves, aggregate_curves(rows));
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drone base station sweep planning and deployment simulator"};
  app.require_subcommand(1, 1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key = value configuration file");
    sub->add_option("--seed", opt.seed, "Override the random seed");
    sub->add_option("--out-dir", opt.out_dir, "Directory for output CSV files");
    sub->add_option("--algorithm", opt.algorithm, "proposed or random_search");
    sub->add_option("--r-e", opt.r_e, "Position estimate error bound, meters");
    sub->add_option("--estimate-mode", opt.estimate_mode, "abstract or tdoa");
    sub->add_option("--sigma", opt.sigma, "TDOA range-difference noise, meters");
    sub->add_flag("--table3-faithful", opt.table3, "Start from the 10 x 10 km published setting");
  };
  auto* plan = app.add_subcommand("plan", "Decompose the area and write sweep waypoints");
  add_common(plan);
  auto* simulate = app.add_subcommand("simulate", "Run one simulation and write its metrics");
  add_common(simulate);
  simulate->add_flag("--trace", opt.trace, "Also write per-tick drone positions");
  auto* compare = app.add_subcommand("compare", "Monte Carlo comparison of both algorithms");
  add_common(compare);
  compare->add_option("--densities", opt.densities, "Comma-separated users/km^2 list");
  compare->add_option("--replications", opt.replications, "Replications per density");
  compare->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "dronebs: usage: " << one_line(e.what()) << '\n';
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = load(opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "dronebs: config: " << one_line(e.what()) << '\n';
    return kExitConfig;
  }

  const fs::path out_dir = opt.out_dir;
  try {
    if (plan->parsed()) return cmd_plan(cfg, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, opt.trace);
    return cmd_compare(cfg, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "dronebs: config: " << one_line(e.what()) << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "dronebs: runtime: " << one_line(e.what()) << '\n';
    return kExitRuntime;
  }
}

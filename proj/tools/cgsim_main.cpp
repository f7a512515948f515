// cgsim: seeded experiment runner for the adaptive-adversary simulations.
//
// Subcommands mirror the experiment kinds; every run is a pure function of
// (config, seed) and writes byte-identical reports on reruns. Wall time is
// printed to stdout only, never into the report files.

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "cgsim/harness.hpp"

namespace {

cgsim::Json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  return cgsim::Json::parse(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cgsim: adaptive-adversary distribution-learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  std::int64_t trials = 0;
  bool exact = false;
  int threads = 0;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--trials", trials, "Monte Carlo trials (overrides config)");
  app.add_option("--out", out_path, "output directory for report.json / estimates.csv");
  app.add_flag("--exact", exact, "force exact-rational mode where applicable");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");

  const char* subcommands[] = {"realizable", "confuse",   "failure", "invert-check",
                               "lift-check", "example-b", "params"};
  for (const char* name : subcommands) app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  cgsim::Json config = config_path.empty() ? cgsim::Json::object() : load_config(config_path);
  config["experiment"] = app.get_subcommands().front()->get_name();
  if (app.count("--seed")) config["seed"] = seed;
  if (app.count("--trials")) config["trials"] = trials;
  if (exact) config["exact"] = true;

  try {
    const auto t0 = std::chrono::steady_clock::now();
    cgsim::RunReport report = cgsim::run_experiment(config);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& c : report.checks) {
      std::cout << "[" << c.verdict << "] " << c.name << ": " << c.lhs << " " << c.relation << " "
                << c.rhs;
      if (!c.detail.empty()) std::cout << "   (" << c.detail << ")";
      std::cout << "\n";
    }
    std::cout << "experiment=" << report.experiment << " checks=" << report.checks.size()
              << " all_pass=" << (report.all_pass() ? "yes" : "no") << " wall_s=" << wall << "\n";
    if (!out_path.empty()) {
      report.write(out_path);
      std::cout << "report written to " << out_path << "\n";
    }
    return report.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

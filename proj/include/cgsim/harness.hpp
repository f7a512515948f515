#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgsim/domain.hpp"

namespace cgsim {

// One verified inequality: both sides are always reported next to the
// verdict so a report line can be audited without rerunning.
struct CheckLine {
  std::string name;
  double lhs = 0.0;
  std::string relation;  // "<=", ">=", "=="
  double rhs = 0.0;
  std::string verdict;   // PASS | FAIL | INFO
  std::string detail;

  Json to_json() const;
};

struct RunReport {
  std::string experiment;
  std::string config_hash;
  Json config_echo;
  std::vector<CheckLine> checks;
  Json summary = Json::object();
  std::vector<Json> estimates;          // advantage rows with caps and verdicts
  std::string trial_header;             // per-trial CSV (optional)
  std::vector<std::string> trial_rows;

  bool all_pass() const;
  Json to_json() const;
  std::string estimates_csv() const;
  // Writes report.json, estimates.csv and (when present) trials.csv.
  void write(const std::string& out_dir) const;
};

// FNV-1a over the canonical dump; identifies a config in CSV rows.
std::string config_hash(const Json& config);

RunReport run_realizable(const Json& config);
RunReport run_confusion(const Json& config);
RunReport run_failure(const Json& config);
RunReport run_invert_check(const Json& config);
RunReport run_lift_check(const Json& config);
RunReport run_example_b(const Json& config);
RunReport run_params(const Json& config);

// Dispatches on config["experiment"].
RunReport run_experiment(const Json& config);

}  // namespace cgsim

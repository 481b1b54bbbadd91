#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "commrec/metrics.hpp"
#include "commrec/osvt.hpp"
#include "commrec/parallel.hpp"

namespace commrec {

inline constexpr const char* kMethodProposed = "proposed";
inline constexpr const char* kMethodBaseline1 = "baseline1";
inline constexpr const char* kMethodBaseline2 = "baseline2";

struct RunConfig {
  std::string measurements_csv;
  std::string topology_json;
  std::string output_dir;  // empty = no artifacts written
  std::string family = "voltage";

  int k = 5;
  double alpha = 0.3;
  int page_rows = 8;     // L
  int page_windows = 6;  // W
  int f_max = 5;         // 0 = no failures injected
  int trials = 200;
  std::uint64_t seed = 0;
  int tree_count = 0;  // 0 = auto (root degree)
  bool fixed_failure_count = false;
  int burst_len = 1;

  std::set<std::string> methods = {kMethodProposed, kMethodBaseline1, kMethodBaseline2};
  OsvtConfig osvt;

  std::vector<std::string> export_series;  // sensor ids, trial 0
  bool write_recovered = true;             // trial-0 recovered matrices
  int scenario_export_limit = -1;          // -1 = all trials

  void validate() const;
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

struct MethodMetrics {
  std::vector<MetricTriple> per_cluster;  // index = cluster
  MetricTriple combined;                  // pooled over entries
  double unweighted_mean_mae = 0.0;       // mean of per-cluster MAEs
};

struct ExperimentResult {
  nlohmann::json report;  // exactly what report.json holds
  std::map<std::string, MethodMetrics> methods;
  long long remainder_samples = 0;
  bool metrics_skipped = false;  // no missing entries anywhere
};

/// Runs the full experiment: cluster sensors, build routing plans, sample
/// per-trial failure scenarios (shared across methods), recover with each
/// method, and score over missing entries. Writes report + artifacts under
/// config.output_dir unless it is empty. Trials run in parallel in OpenMP
/// mode with results reduced in trial order, so both modes produce
/// byte-identical reports.
ExperimentResult run_experiment(const RunConfig& config, ExecMode mode = ExecMode::OpenMP);

/// Re-checks all plan invariants on an exported plan file.
/// Returns violations; empty means the plan is valid.
std::vector<std::string> validate_plan_file(const std::string& path);

}  // namespace commrec

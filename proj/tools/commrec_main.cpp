#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commrec/datagen.hpp"
#include "commrec/measurement.hpp"
#include "commrec/metrics.hpp"
#include "commrec/parallel.hpp"
#include "commrec/pipeline.hpp"

namespace {

using commrec::ExecMode;
using nlohmann::json;

void apply_worker_env() {
  if (const char* env = std::getenv("COMMREC_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) commrec::set_workers(n);
  }
}

int cmd_run(const std::string& config_path, int trials_override, long long seed_override,
            const std::vector<std::string>& methods_override, bool no_failures,
            const std::vector<std::string>& export_series, bool serial) {
  commrec::RunConfig cfg = commrec::RunConfig::from_file(config_path);
  if (trials_override > 0) cfg.trials = trials_override;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!methods_override.empty())
    cfg.methods = {methods_override.begin(), methods_override.end()};
  if (no_failures) cfg.f_max = 0;
  if (!export_series.empty()) cfg.export_series = export_series;

  commrec::ExperimentResult result =
      commrec::run_experiment(cfg, serial ? ExecMode::Serial : ExecMode::OpenMP);

  if (result.metrics_skipped) {
    std::cout << "notice: no missing entries in any trial; metrics skipped\n";
  } else {
    std::cout << "method,combined_mae,combined_rmse,combined_mape\n";
    for (const auto& [method, mm] : result.methods) {
      std::cout << method << "," << mm.combined.mae << "," << mm.combined.rmse << ",";
      if (mm.combined.mape) std::cout << *mm.combined.mape;
      std::cout << "\n";
    }
    if (result.report.contains("improvements"))
      for (const auto& [key, entry] : result.report.at("improvements").items())
        if (entry.contains("combined_mae_pct") && !entry.at("combined_mae_pct").is_null())
          std::cout << key << ": " << entry.at("combined_mae_pct").get<double>() << "% MAE\n";
  }
  if (!cfg.output_dir.empty())
    std::cout << "report written to " << cfg.output_dir << "/report.json\n";
  return 0;
}

int cmd_gen(const std::string& spec_path, const std::string& out_csv,
            const std::string& groups_out) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("gen: cannot open '" + spec_path + "'");
  commrec::SynthSpec spec = commrec::SynthSpec::from_json(json::parse(in));
  commrec::MeasurementBlock block = commrec::generate(spec);
  commrec::write_measurements_csv(out_csv, block);
  std::cout << "wrote " << block.rows() << " samples x " << block.cols() << " sensors to "
            << out_csv << "\n";
  if (!groups_out.empty()) {
    json groups = json::object();
    for (const auto& [id, g] : commrec::effective_groups(spec)) groups[id] = g;
    std::ofstream gout(groups_out);
    gout << groups.dump(2) << "\n";
  }
  return 0;
}

int cmd_validate_plan(const std::string& plan_path) {
  std::vector<std::string> issues = commrec::validate_plan_file(plan_path);
  if (issues.empty()) {
    std::cout << "plan OK: all invariants hold\n";
    return 0;
  }
  for (const auto& issue : issues) std::cout << "violation: " << issue << "\n";
  return 1;
}

int cmd_score(const std::string& truth_path, const std::string& recovered_path,
              const std::string& mask_path) {
  commrec::MeasurementBlock truth = commrec::read_measurements_csv(truth_path);
  commrec::MeasurementBlock recovered = commrec::read_measurements_csv(recovered_path);
  commrec::MaskCsv mask = commrec::read_mask_csv(mask_path);
  if (truth.sensor_ids != recovered.sensor_ids || truth.sensor_ids != mask.sensor_ids)
    throw std::runtime_error("score: sensor columns differ between inputs");
  commrec::MetricTriple t = commrec::score(truth.values, recovered.values, mask.delivered);
  json out;
  out["mae"] = t.mae;
  out["rmse"] = t.rmse;
  if (t.mape)
    out["mape"] = *t.mape;
  else
    out["mape"] = nullptr;
  out["missing"] = t.missing_count;
  out["mape_excluded"] = t.mape_excluded;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-aware missing data recovery simulator"};
  app.require_subcommand(1);
  apply_worker_env();

  // run
  auto* run = app.add_subcommand("run", "Run the end-to-end experiment from a config file");
  std::string config_path;
  int trials_override = 0;
  long long seed_override = -1;
  std::vector<std::string> methods_override, export_series;
  bool no_failures = false, serial = false;
  run->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run->add_option("--trials", trials_override, "Override trial count");
  run->add_option("--seed", seed_override, "Override master seed");
  run->add_option("--methods", methods_override,
                  "Override method set (proposed, baseline1, baseline2)");
  run->add_flag("--no-failures", no_failures, "Force f_max = 0 (no failures injected)");
  run->add_option("--export-series", export_series, "Export truth/reported/recovered CSV per sensor");
  run->add_flag("--serial", serial, "Use the serial reference path instead of OpenMP");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic measurement data");
  std::string spec_path, gen_out = "measurements.csv", groups_out;
  gen->add_option("--spec", spec_path, "Generator spec (JSON)")->required();
  gen->add_option("--out", gen_out, "Output CSV path");
  gen->add_option("--groups-out", groups_out, "Also write the sensor group map (JSON)");

  // validate-plan
  auto* validate = app.add_subcommand("validate-plan", "Re-check the invariants of a plan file");
  std::string plan_path;
  validate->add_option("plan", plan_path, "Exported plan (JSON)")->required();

  // score
  auto* score = app.add_subcommand("score", "Score recovered values against the truth");
  std::string truth_path, recovered_path, mask_path;
  score->add_option("--truth", truth_path, "Ground truth CSV")->required();
  score->add_option("--recovered", recovered_path, "Recovered CSV")->required();
  score->add_option("--mask", mask_path, "Delivery mask CSV (1 = delivered)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, trials_override, seed_override, methods_override, no_failures,
                     export_series, serial);
    if (gen->parsed()) return cmd_gen(spec_path, gen_out, groups_out);
    if (validate->parsed()) return cmd_validate_plan(plan_path);
    if (score->parsed()) return cmd_score(truth_path, recovered_path, mask_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commrec/datagen.hpp"
#include "commrec/graph.hpp"
#include "commrec/measurement.hpp"
#include "commrec/pipeline.hpp"

using namespace commrec;
namespace fs = std::filesystem;

namespace {

std::string fixture(const char* name) {
  return std::string(COMMREC_FIXTURE_DIR) + "/" + name;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small feeder-based experiment: synthetic data aligned with the fixture's
// sensor groups, short horizon, few trials.
RunConfig small_config(const fs::path& dir, int trials) {
  fs::create_directories(dir);

  CommNetwork net = load_network_file(fixture("ieee37_comm.json"));
  std::ifstream gin(fixture("ieee37_groups.json"));
  nlohmann::json groups = nlohmann::json::parse(gin);

  SynthSpec spec;
  spec.sensors = static_cast<int>(net.sensor_sites.size());
  spec.samples = 192;  // 4 tiles of L*W = 48
  spec.rank = 2;
  spec.groups = 5;
  spec.noise = 0.0005;
  spec.seed = 71;
  spec.value_range = {{0.95, 1.05}};
  spec.sensor_ids = net.sensor_order();
  for (const auto& [id, g] : groups.items()) spec.group_map[id] = g.get<int>();

  const fs::path csv = dir / "measurements.csv";
  write_measurements_csv(csv.string(), generate(spec));

  RunConfig cfg;
  cfg.measurements_csv = csv.string();
  cfg.topology_json = fixture("ieee37_comm.json");
  cfg.output_dir = (dir / "out").string();
  cfg.k = 5;
  cfg.alpha = 0.3;
  cfg.page_rows = 8;
  cfg.page_windows = 6;
  cfg.f_max = 5;
  cfg.trials = trials;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("run with no failures reports a notice and skips metrics") {
  const fs::path dir = fs::temp_directory_path() / "commrec_test_nofail";
  RunConfig cfg = small_config(dir, 1);
  cfg.f_max = 0;
  cfg.write_recovered = false;
  ExperimentResult result = run_experiment(cfg, ExecMode::Serial);
  CHECK(result.metrics_skipped);
  CHECK(result.report.contains("notice"));
  for (const auto& [method, mm] : result.methods) CHECK(mm.combined.missing_count == 0);
  fs::remove_all(dir);
}

TEST_CASE("full run: artifacts, reproducibility, serial/OpenMP equality") {
  const fs::path dir = fs::temp_directory_path() / "commrec_test_run";
  RunConfig cfg = small_config(dir, 4);
  cfg.export_series = {"s701"};
  cfg.scenario_export_limit = 2;

  ExperimentResult first = run_experiment(cfg, ExecMode::OpenMP);

  CHECK(!first.metrics_skipped);
  CHECK(first.remainder_samples == 0);
  for (const auto& [method, mm] : first.methods) {
    CHECK(mm.combined.missing_count > 0);
    CHECK(mm.combined.mae <= mm.combined.rmse + 1e-12);
  }
  // baseline1 and baseline2 share masks, so they score the same cells.
  CHECK(first.methods.at(kMethodBaseline1).combined.missing_count ==
        first.methods.at(kMethodBaseline2).combined.missing_count);

  const fs::path out = dir / "out";
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.csv"));
  CHECK(fs::exists(out / "clusters.json"));
  CHECK(fs::exists(out / "plan.json"));
  CHECK(fs::exists(out / "plan_baseline.json"));
  CHECK(fs::exists(out / "scenarios" / "trial_00000.jsonl"));
  CHECK(fs::exists(out / "scenarios" / "trial_00001.jsonl"));
  CHECK(!fs::exists(out / "scenarios" / "trial_00002.jsonl"));  // limit
  CHECK(fs::exists(out / "recovered" / "proposed_trial0.csv"));
  CHECK(fs::exists(out / "series_s701.csv"));

  // Exported plans revalidate cleanly.
  CHECK(validate_plan_file((out / "plan.json").string()).empty());
  CHECK(validate_plan_file((out / "plan_baseline.json").string()).empty());

  const std::string report_a = read_file(out / "report.json");

  SUBCASE("identical config and seed reproduce the report byte for byte") {
    ExperimentResult second = run_experiment(cfg, ExecMode::OpenMP);
    CHECK(read_file(out / "report.json") == report_a);
  }

  SUBCASE("the serial reference path produces the identical report") {
    ExperimentResult serial = run_experiment(cfg, ExecMode::Serial);
    CHECK(read_file(out / "report.json") == report_a);
  }

  SUBCASE("a different seed changes the report") {
    cfg.seed = 43;
    ExperimentResult other = run_experiment(cfg, ExecMode::OpenMP);
    CHECK(read_file(out / "report.json") != report_a);
  }

  fs::remove_all(dir);
}

TEST_CASE("exported series carries truth, reported and recovered columns") {
  const fs::path dir = fs::temp_directory_path() / "commrec_test_series";
  RunConfig cfg = small_config(dir, 1);
  cfg.export_series = {"s731"};
  cfg.write_recovered = false;
  cfg.scenario_export_limit = 0;
  run_experiment(cfg, ExecMode::Serial);
  std::ifstream in(dir / "out" / "series_s731.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "timestamp,truth,reported,recovered_baseline1,recovered_baseline2,recovered_proposed");
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 192);
  fs::remove_all(dir);
}

TEST_CASE("method subsets run independently") {
  const fs::path dir = fs::temp_directory_path() / "commrec_test_subset";
  RunConfig cfg = small_config(dir, 2);
  cfg.methods = {kMethodProposed};
  cfg.write_recovered = false;
  cfg.scenario_export_limit = 0;
  ExperimentResult result = run_experiment(cfg, ExecMode::Serial);
  CHECK(result.methods.count(kMethodProposed) == 1);
  CHECK(result.methods.count(kMethodBaseline1) == 0);
  CHECK(!fs::exists(dir / "out" / "plan_baseline.json"));
  fs::remove_all(dir);
}

TEST_CASE("configuration errors surface early") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no paths

  cfg.measurements_csv = "x.csv";
  cfg.topology_json = "y.json";
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.alpha = 0.3;
  cfg.page_rows = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.page_rows = 8;
  cfg.methods = {"nope"};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  RunConfig cfg;
  cfg.measurements_csv = "m.csv";
  cfg.topology_json = "t.json";
  cfg.k = 3;
  cfg.alpha = 0.25;
  cfg.osvt.mode = OsvtConfig::Mode::PaperLiteralSinglePass;
  cfg.osvt.threshold_scale = OsvtConfig::ThresholdScale::MedianScaled;
  cfg.methods = {kMethodProposed, kMethodBaseline1};
  RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.k == 3);
  CHECK(back.alpha == 0.25);
  CHECK(back.osvt.mode == OsvtConfig::Mode::PaperLiteralSinglePass);
  CHECK(back.osvt.threshold_scale == OsvtConfig::ThresholdScale::MedianScaled);
  CHECK(back.methods == cfg.methods);
}

TEST_CASE("missing sensor column is a clear error") {
  const fs::path dir = fs::temp_directory_path() / "commrec_test_badcsv";
  fs::create_directories(dir);
  std::ofstream csv(dir / "short.csv");
  csv << "timestamp,s701\n0,1.0\n1,1.0\n";
  csv.close();
  RunConfig cfg;
  cfg.measurements_csv = (dir / "short.csv").string();
  cfg.topology_json = fixture("ieee37_comm.json");
  cfg.trials = 1;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, ExecMode::Serial),
                       doctest::Contains("missing from the measurement CSV"),
                       std::runtime_error);
  fs::remove_all(dir);
}

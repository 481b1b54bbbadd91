// Compares the serial reference path against the OpenMP trial loop on a
// synthetic workload and checks that both produce identical reports.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "commrec/datagen.hpp"
#include "commrec/measurement.hpp"
#include "commrec/parallel.hpp"
#include "commrec/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Ring of `spokes` branches around a central root, sensors on every
// non-root node. Dense enough for several disjoint trees.
std::string make_topology(int spokes, int depth) {
  nlohmann::json doc;
  auto name = [](int s, int d) { return "n" + std::to_string(s) + "_" + std::to_string(d); };
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json links = nlohmann::json::array();
  nlohmann::json sensors = nlohmann::json::array();
  nodes.push_back("root");
  for (int s = 0; s < spokes; ++s)
    for (int d = 0; d < depth; ++d) {
      nodes.push_back(name(s, d));
      sensors.push_back({{"id", "s_" + name(s, d)}, {"node", name(s, d)}});
      links.push_back({{"a", d == 0 ? std::string("root") : name(s, d - 1)},
                       {"b", name(s, d)},
                       {"channels", 8}});
      // Cross links between neighbouring spokes at the same depth.
      if (s > 0) links.push_back({{"a", name(s - 1, d)}, {"b", name(s, d)}, {"channels", 8}});
    }
  for (int d = 0; d < depth; ++d)
    links.push_back({{"a", name(spokes - 1, d)}, {"b", name(0, d)}, {"channels", 8}});
  doc["nodes"] = nodes;
  doc["links"] = links;
  doc["root"] = "root";
  doc["sensors"] = sensors;
  return doc.dump();
}

double run_once(const commrec::RunConfig& cfg, commrec::ExecMode mode, std::string* report) {
  auto start = Clock::now();
  commrec::ExperimentResult result = commrec::run_experiment(cfg, mode);
  auto stop = Clock::now();
  *report = result.report.dump();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  int trials = 64;
  int spokes = 6, depth = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--trials") trials = std::atoi(argv[i + 1]);
    if (flag == "--spokes") spokes = std::atoi(argv[i + 1]);
    if (flag == "--depth") depth = std::atoi(argv[i + 1]);
  }

  fs::path dir = fs::temp_directory_path() / "commrec_bench";
  fs::create_directories(dir);
  fs::path topo_path = dir / "topology.json";
  {
    std::ofstream out(topo_path);
    out << make_topology(spokes, depth);
  }

  commrec::SynthSpec spec;
  spec.sensors = spokes * depth;
  spec.samples = 480;
  spec.rank = 2;
  spec.groups = 5;
  spec.noise = 0.001;
  spec.seed = 11;
  spec.value_range = {{0.95, 1.05}};
  for (int s = 0; s < spokes; ++s)
    for (int d = 0; d < depth; ++d)
      spec.sensor_ids.push_back("s_n" + std::to_string(s) + "_" + std::to_string(d));
  std::sort(spec.sensor_ids.begin(), spec.sensor_ids.end());
  fs::path csv_path = dir / "measurements.csv";
  commrec::write_measurements_csv(csv_path.string(), commrec::generate(spec));

  commrec::RunConfig cfg;
  cfg.measurements_csv = csv_path.string();
  cfg.topology_json = topo_path.string();
  cfg.output_dir = "";  // in-memory only
  cfg.k = 5;
  cfg.alpha = 0.4;
  cfg.page_rows = 8;
  cfg.page_windows = 6;
  cfg.f_max = 4;
  cfg.trials = trials;
  cfg.seed = 7;

  std::string serial_report, omp_report;
  double warm = run_once(cfg, commrec::ExecMode::Serial, &serial_report);  // warm caches
  double serial_ms = run_once(cfg, commrec::ExecMode::Serial, &serial_report);
  double omp_ms = run_once(cfg, commrec::ExecMode::OpenMP, &omp_report);
  (void)warm;

  std::printf("trials=%d sensors=%d workers=%d\n", trials, spec.sensors,
              commrec::max_workers());
  std::printf("serial reference : %9.1f ms\n", serial_ms);
  std::printf("openmp kernels   : %9.1f ms\n", omp_ms);
  std::printf("speedup          : %9.2fx\n", serial_ms / omp_ms);
  if (serial_report != omp_report) {
    std::printf("MISMATCH: serial and OpenMP reports differ\n");
    return 1;
  }
  std::printf("reports identical: yes\n");
  return 0;
}

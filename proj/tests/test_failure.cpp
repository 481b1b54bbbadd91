#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "commrec/failure.hpp"
#include "commrec/graph.hpp"
#include "commrec/ldst.hpp"

using namespace commrec;

namespace {

CommNetwork feeder() {
  return load_network_file(std::string(COMMREC_FIXTURE_DIR) + "/ieee37_comm.json");
}

ClusterAssignment feeder_clusters() {
  std::ifstream in(std::string(COMMREC_FIXTURE_DIR) + "/ieee37_groups.json");
  nlohmann::json doc = nlohmann::json::parse(in);
  ClusterAssignment out;
  for (const auto& [id, g] : doc.items()) {
    out.membership[id] = g.get<int>();
    out.k = std::max(out.k, g.get<int>() + 1);
  }
  return out;
}

}  // namespace

TEST_CASE("sample_failures draws between 1 and f_max links per step") {
  CommNetwork net = feeder();
  FailureScenario scenario = sample_failures(net, 500, 5, 123);
  std::set<int> counts_seen;
  for (const auto& step : scenario.failed) {
    CHECK(step.size() >= 1);
    CHECK(step.size() <= 5);
    counts_seen.insert(static_cast<int>(step.size()));
    std::set<int> uniq(step.begin(), step.end());
    CHECK(uniq.size() == step.size());  // without replacement
    for (int li : step) CHECK(li < static_cast<int>(net.links.size()));
  }
  CHECK(counts_seen.size() == 5);  // all counts appear over 500 steps
}

TEST_CASE("sample_failures boundary and error cases") {
  CommNetwork net = feeder();
  CHECK_THROWS_AS(sample_failures(net, 10, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_failures(net, 10, static_cast<int>(net.links.size()) + 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_failures(net, 0, 1, 0), std::invalid_argument);

  // f_max = link count with a fixed count: one step may fail every link.
  FailureScenario all = sample_failures(net, 1, static_cast<int>(net.links.size()), 7, true);
  CHECK(all.failed[0].size() == net.links.size());
}

TEST_CASE("same seed reproduces the scenario, different seeds differ") {
  CommNetwork net = feeder();
  FailureScenario a = sample_failures(net, 200, 5, 99);
  FailureScenario b = sample_failures(net, 200, 5, 99);
  CHECK(a.failed == b.failed);
  FailureScenario c = sample_failures(net, 200, 5, 100);
  CHECK(a.failed != c.failed);
}

TEST_CASE("burst_len holds failures for consecutive steps") {
  CommNetwork net = feeder();
  FailureScenario scenario = sample_failures(net, 12, 3, 5, false, 4);
  for (int t = 0; t < 12; ++t) CHECK(scenario.failed[t] == scenario.failed[t - t % 4]);
  CHECK(scenario.failed[0] != scenario.failed[4]);  // overwhelmingly likely
}

TEST_CASE("derive_mask respects path containment") {
  // root -- a -- b with a sensor at b: failing (root, a) cuts the sensor
  // off even though (a, b) stays up.
  const char* doc = R"({
    "nodes": ["a", "b", "root"],
    "links": [{"a": "root", "b": "a"}, {"a": "a", "b": "b"}],
    "root": "root",
    "sensors": [{"id": "sb", "node": "b"}]
  })";
  CommNetwork net = load_network(doc);
  ClusterAssignment clusters;
  clusters.k = 1;
  clusters.membership["sb"] = 0;
  LdstPlan plan = build_unconstrained_plan(net, clusters, kAutoTreeCount, 0);

  FailureScenario scenario = empty_scenario(3);
  scenario.failed[1] = {net.link_index("root", "a")};
  scenario.failed[2] = {net.link_index("a", "b")};

  ObservationMask mask = derive_mask(scenario, plan, {"sb"});
  CHECK(mask.delivered(0, 0));   // no failure
  CHECK(!mask.delivered(1, 0));  // upstream link down
  CHECK(!mask.delivered(2, 0));  // leaf link down
  CHECK(mask.missing_count() == 2);
}

TEST_CASE("failures on one tree leave sensors of other trees delivered") {
  CommNetwork net = feeder();
  ClusterAssignment clusters = feeder_clusters();
  LdstPlan plan = build_ldst_plan(net, clusters, 0.3, kAutoTreeCount, 3);
  std::vector<std::string> order = net.sensor_order();

  for (std::size_t m = 0; m < plan.trees.size(); ++m) {
    FailureScenario scenario = empty_scenario(1);
    scenario.failed[0] = plan.trees[m];  // the whole tree goes dark
    ObservationMask mask = derive_mask(scenario, plan, order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const bool on_failed_tree = plan.assignment.at(order[i]) == static_cast<int>(m);
      if (on_failed_tree && !plan.root_paths.at(order[i]).empty())
        CHECK(!mask.delivered(0, static_cast<Eigen::Index>(i)));
      else
        CHECK(mask.delivered(0, static_cast<Eigen::Index>(i)));
    }
  }
}

TEST_CASE("cluster survivability under any single-tree failure") {
  CommNetwork net = feeder();
  ClusterAssignment clusters = feeder_clusters();
  const double alpha = 0.3;
  LdstPlan plan = build_ldst_plan(net, clusters, alpha, kAutoTreeCount, 3);
  std::vector<std::string> order = net.sensor_order();
  std::vector<int> cluster_sizes(clusters.k, 0);
  for (const auto& [id, k] : clusters.membership) ++cluster_sizes[k];

  for (std::size_t m = 0; m < plan.trees.size(); ++m) {
    FailureScenario scenario = empty_scenario(1);
    scenario.failed[0] = plan.trees[m];
    ObservationMask mask = derive_mask(scenario, plan, order);
    std::vector<int> delivered(clusters.k, 0);
    for (std::size_t i = 0; i < order.size(); ++i)
      if (mask.delivered(0, static_cast<Eigen::Index>(i)))
        ++delivered[clusters.membership.at(order[i])];
    for (int k = 0; k < clusters.k; ++k)
      CHECK(delivered[k] >= (1.0 - alpha) * cluster_sizes[k] - 1e-9);
  }
}

TEST_CASE("adding failures only shrinks the delivered set") {
  CommNetwork net = feeder();
  ClusterAssignment clusters = feeder_clusters();
  LdstPlan plan = build_ldst_plan(net, clusters, 0.3, kAutoTreeCount, 3);
  std::vector<std::string> order = net.sensor_order();

  FailureScenario small = sample_failures(net, 50, 3, 21);
  FailureScenario large = small;
  for (int t = 0; t < 50; ++t) {
    large.failed[t].push_back((t * 7) % static_cast<int>(net.links.size()));
    std::sort(large.failed[t].begin(), large.failed[t].end());
    large.failed[t].erase(std::unique(large.failed[t].begin(), large.failed[t].end()),
                          large.failed[t].end());
  }
  ObservationMask mask_small = derive_mask(small, plan, order);
  ObservationMask mask_large = derive_mask(large, plan, order);
  for (Eigen::Index t = 0; t < 50; ++t)
    for (Eigen::Index i = 0; i < mask_small.delivered.cols(); ++i)
      if (mask_large.delivered(t, i)) CHECK(mask_small.delivered(t, i));
}

TEST_CASE("serial and OpenMP mask derivation agree") {
  CommNetwork net = feeder();
  ClusterAssignment clusters = feeder_clusters();
  LdstPlan plan = build_ldst_plan(net, clusters, 0.3, kAutoTreeCount, 3);
  std::vector<std::string> order = net.sensor_order();
  FailureScenario scenario = sample_failures(net, 480, 5, 17);
  ObservationMask serial = derive_mask(scenario, plan, order, ExecMode::Serial);
  ObservationMask parallel = derive_mask(scenario, plan, order, ExecMode::OpenMP);
  CHECK((serial.delivered == parallel.delivered).all());
}

TEST_CASE("mask errors on sensors missing from the plan") {
  CommNetwork net = feeder();
  ClusterAssignment clusters = feeder_clusters();
  LdstPlan plan = build_ldst_plan(net, clusters, 0.3, kAutoTreeCount, 3);
  FailureScenario scenario = empty_scenario(1);
  CHECK_THROWS_AS(derive_mask(scenario, plan, {"nope"}), std::invalid_argument);
}

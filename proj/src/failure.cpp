#include "commrec/failure.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace commrec {

long long ObservationMask::missing_count() const {
  return static_cast<long long>(delivered.size()) -
         static_cast<long long>(delivered.count());
}

FailureScenario sample_failures(const CommNetwork& net, int horizon, int f_max,
                                std::uint64_t seed, bool fixed_count, int burst_len) {
  const int link_count = static_cast<int>(net.links.size());
  if (horizon < 1) throw std::invalid_argument("failures: horizon must be >= 1");
  if (f_max < 1) throw std::invalid_argument("failures: f_max must be >= 1");
  if (f_max > link_count)
    throw std::invalid_argument("failures: f_max exceeds the number of links");
  if (burst_len < 1) throw std::invalid_argument("failures: burst_len must be >= 1");

  FailureScenario scenario;
  scenario.horizon = horizon;
  scenario.f_max = f_max;
  scenario.seed = seed;
  scenario.fixed_count = fixed_count;
  scenario.burst_len = burst_len;
  scenario.failed.resize(horizon);

  std::mt19937_64 rng(seed);
  std::vector<int> pool(link_count);
  for (int i = 0; i < link_count; ++i) pool[i] = i;

  for (int t = 0; t < horizon; ++t) {
    if (t % burst_len != 0) {
      scenario.failed[t] = scenario.failed[t - 1];
      continue;
    }
    int count = fixed_count
                    ? f_max
                    : 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(f_max));
    // Partial Fisher-Yates: distinct links without replacement.
    for (int j = 0; j < count; ++j) {
      int pick = j + static_cast<int>(rng() % static_cast<std::uint64_t>(link_count - j));
      std::swap(pool[j], pool[pick]);
    }
    scenario.failed[t].assign(pool.begin(), pool.begin() + count);
    std::sort(scenario.failed[t].begin(), scenario.failed[t].end());
  }
  return scenario;
}

FailureScenario empty_scenario(int horizon) {
  if (horizon < 1) throw std::invalid_argument("failures: horizon must be >= 1");
  FailureScenario scenario;
  scenario.horizon = horizon;
  scenario.f_max = 0;
  scenario.failed.resize(horizon);
  return scenario;
}

ObservationMask derive_mask(const FailureScenario& scenario, const LdstPlan& plan,
                            const std::vector<std::string>& sensors, ExecMode mode) {
  const int horizon = scenario.horizon;
  const int n = static_cast<int>(sensors.size());

  // Root paths in column order, resolved once.
  std::vector<const std::vector<int>*> paths(n);
  int max_link = -1;
  for (int i = 0; i < n; ++i) {
    auto it = plan.root_paths.find(sensors[i]);
    if (it == plan.root_paths.end())
      throw std::invalid_argument("mask: sensor '" + sensors[i] + "' is absent from the plan");
    paths[i] = &it->second;
    for (int li : it->second) max_link = std::max(max_link, li);
  }
  for (const auto& step : scenario.failed)
    for (int li : step) max_link = std::max(max_link, li);

  ObservationMask mask;
  mask.sensors = sensors;
  mask.delivered = MaskMatrix::Constant(horizon, n, true);

  parallel_for(horizon, mode, [&](std::int64_t t) {
    const auto& failed = scenario.failed[t];
    if (failed.empty()) return;
    std::vector<char> down(max_link + 1, 0);
    for (int li : failed) down[li] = 1;
    for (int i = 0; i < n; ++i)
      for (int li : *paths[i])
        if (down[li]) {
          mask.delivered(t, i) = false;
          break;
        }
  });
  return mask;
}

std::string scenario_to_jsonl(const FailureScenario& scenario, const CommNetwork& net) {
  std::ostringstream out;
  for (int t = 0; t < scenario.horizon; ++t) {
    nlohmann::json rec;
    rec["t"] = t;
    nlohmann::json failed = nlohmann::json::array();
    for (int li : scenario.failed[t])
      failed.push_back({{"a", net.links[li].a}, {"b", net.links[li].b}});
    rec["failed"] = failed;
    out << rec.dump() << "\n";
  }
  return out.str();
}

}  // namespace commrec

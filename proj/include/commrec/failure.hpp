#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "commrec/graph.hpp"
#include "commrec/ldst.hpp"
#include "commrec/parallel.hpp"
#include "commrec/types.hpp"

namespace commrec {

/// Per-step failed link sets over a horizon.
struct FailureScenario {
  int horizon = 0;
  int f_max = 0;
  std::uint64_t seed = 0;
  bool fixed_count = false;
  int burst_len = 1;
  std::vector<std::vector<int>> failed;  // per step, sorted link indices
};

/// T x N delivery mask (true = delivered) for a fixed sensor order.
struct ObservationMask {
  std::vector<std::string> sensors;
  MaskMatrix delivered;

  long long missing_count() const;
};

/// Per step draws a failure count (uniform on {1..f_max}, or exactly f_max
/// in fixed_count mode) and that many distinct links uniformly without
/// replacement. burst_len > 1 holds each draw for that many consecutive
/// steps. Deterministic for a given seed.
FailureScenario sample_failures(const CommNetwork& net, int horizon, int f_max,
                                std::uint64_t seed, bool fixed_count = false,
                                int burst_len = 1);

/// Scenario with no failures at any step (the f_max = 0 escape hatch).
FailureScenario empty_scenario(int horizon);

/// Entry (t, i) is delivered iff no link on sensor i's root path failed
/// at t. Sensors with an empty root path (sited at the root) always
/// deliver. Pure in (scenario, plan); both exec modes give identical masks.
ObservationMask derive_mask(const FailureScenario& scenario, const LdstPlan& plan,
                            const std::vector<std::string>& sensors,
                            ExecMode mode = ExecMode::Serial);

/// One JSON record per time step (JSON lines).
std::string scenario_to_jsonl(const FailureScenario& scenario, const CommNetwork& net);

}  // namespace commrec

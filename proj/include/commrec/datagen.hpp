#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "commrec/measurement.hpp"

namespace commrec {

/// Synthetic ground-truth generator: each group mixes its own set of
/// latent signals (sums of sinusoids with day-scale periods, optional slow
/// trend), so same-group sensors are strongly correlated and the per-group
/// Page matrices are low rank.
struct SynthSpec {
  int sensors = 30;
  int samples = 1440;
  int rank = 2;            // latent signals per group
  int groups = 1;
  int sines_per_latent = 3;
  bool trend = true;
  bool sensor_offsets = true;  // per-sensor constant baseline
  double noise = 0.0;          // Gaussian sigma, applied before range scaling
  std::uint64_t seed = 0;
  std::optional<std::pair<double, double>> value_range;  // global affine target

  std::vector<std::string> sensor_ids;    // optional; default s000, s001, ...
  std::map<std::string, int> group_map;   // optional explicit map; else round-robin

  void validate() const;
  static SynthSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Resolved sensor id -> group index for a spec.
std::map<std::string, int> effective_groups(const SynthSpec& spec);

/// Deterministic for a given seed.
MeasurementBlock generate(const SynthSpec& spec);

}  // namespace commrec

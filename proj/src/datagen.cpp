#include "commrec/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace commrec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string default_sensor_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%03d", i);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (sensors < 1) throw std::invalid_argument("datagen: sensors must be >= 1");
  if (samples < 2) throw std::invalid_argument("datagen: samples must be >= 2");
  if (rank < 1 || rank > std::min(sensors, samples))
    throw std::invalid_argument("datagen: rank must lie in [1, min(sensors, samples)]");
  if (groups < 1 || groups > sensors)
    throw std::invalid_argument("datagen: groups must lie in [1, sensors]");
  if (sines_per_latent < 1)
    throw std::invalid_argument("datagen: sines_per_latent must be >= 1");
  if (noise < 0) throw std::invalid_argument("datagen: noise must be >= 0");
  if (!sensor_ids.empty() && static_cast<int>(sensor_ids.size()) != sensors)
    throw std::invalid_argument("datagen: sensor_ids length mismatch");
  if (value_range && !(value_range->first < value_range->second))
    throw std::invalid_argument("datagen: value range must be increasing");
  for (const auto& [id, g] : group_map)
    if (g < 0 || g >= groups)
      throw std::invalid_argument("datagen: group index out of range for sensor '" + id + "'");
}

std::map<std::string, int> effective_groups(const SynthSpec& spec) {
  std::vector<std::string> ids = spec.sensor_ids;
  if (ids.empty())
    for (int i = 0; i < spec.sensors; ++i) ids.push_back(default_sensor_id(i));
  std::map<std::string, int> out;
  for (int i = 0; i < spec.sensors; ++i) {
    auto it = spec.group_map.find(ids[i]);
    out[ids[i]] = it != spec.group_map.end() ? it->second : i % spec.groups;
  }
  return out;
}

MeasurementBlock generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::string> ids = spec.sensor_ids;
  if (ids.empty())
    for (int i = 0; i < spec.sensors; ++i) ids.push_back(default_sensor_id(i));

  // Latent signals per group: sums of sinusoids around a daily period
  // (48 samples at 30-minute cadence) plus an optional slow trend.
  const int T = spec.samples;
  std::vector<Eigen::MatrixXd> latents(spec.groups);
  for (int g = 0; g < spec.groups; ++g) {
    Eigen::MatrixXd lat(T, spec.rank);
    for (int r = 0; r < spec.rank; ++r) {
      Eigen::VectorXd signal = Eigen::VectorXd::Zero(T);
      for (int s = 0; s < spec.sines_per_latent; ++s) {
        const double period = 24.0 + 72.0 * unit(rng);
        const double amp = 0.5 + 0.5 * unit(rng);
        const double phase = kTwoPi * unit(rng);
        for (int t = 0; t < T; ++t) signal[t] += amp * std::sin(kTwoPi * t / period + phase);
      }
      if (spec.trend) {
        const double slope = -0.3 + 0.6 * unit(rng);
        for (int t = 0; t < T; ++t)
          signal[t] += slope * (static_cast<double>(t) / T - 0.5);
      }
      lat.col(r) = signal;
    }
    latents[g] = std::move(lat);
  }

  std::map<std::string, int> group_of = effective_groups(spec);

  MeasurementBlock block;
  block.sensor_ids = ids;
  block.timestamps.resize(T);
  for (int t = 0; t < T; ++t) block.timestamps[t] = t;
  block.values.resize(T, spec.sensors);
  for (int i = 0; i < spec.sensors; ++i) {
    const int g = group_of.at(ids[i]);
    Eigen::VectorXd weights(spec.rank);
    for (int r = 0; r < spec.rank; ++r) weights[r] = 0.2 + 0.8 * unit(rng);
    const double offset = spec.sensor_offsets ? -0.5 + unit(rng) : 0.0;
    Eigen::VectorXd series = latents[g] * weights;
    series.array() += offset;
    if (spec.noise > 0)
      for (int t = 0; t < T; ++t) series[t] += spec.noise * gauss(rng);
    block.values.col(i) = series;
  }

  if (spec.value_range) {
    const double lo = block.values.minCoeff();
    const double hi = block.values.maxCoeff();
    const auto [target_lo, target_hi] = *spec.value_range;
    if (hi > lo) {
      const double scale = (target_hi - target_lo) / (hi - lo);
      block.values = ((block.values.array() - lo) * scale + target_lo).matrix();
    } else {
      block.values.setConstant(0.5 * (target_lo + target_hi));
    }
  }
  return block;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& doc) {
  SynthSpec spec;
  spec.sensors = doc.value("sensors", spec.sensors);
  spec.samples = doc.value("samples", spec.samples);
  spec.rank = doc.value("rank", spec.rank);
  spec.groups = doc.value("groups", spec.groups);
  spec.sines_per_latent = doc.value("sines_per_latent", spec.sines_per_latent);
  spec.trend = doc.value("trend", spec.trend);
  spec.sensor_offsets = doc.value("sensor_offsets", spec.sensor_offsets);
  spec.noise = doc.value("noise", spec.noise);
  spec.seed = doc.value("seed", spec.seed);
  if (doc.contains("value_min") != doc.contains("value_max"))
    throw std::invalid_argument("datagen: value_min and value_max must come together");
  if (doc.contains("value_min"))
    spec.value_range = {doc.at("value_min").get<double>(), doc.at("value_max").get<double>()};
  if (doc.contains("sensor_ids"))
    spec.sensor_ids = doc.at("sensor_ids").get<std::vector<std::string>>();
  if (doc.contains("group_map"))
    for (const auto& [id, g] : doc.at("group_map").items())
      spec.group_map[id] = g.get<int>();
  spec.validate();
  return spec;
}

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json doc;
  doc["sensors"] = sensors;
  doc["samples"] = samples;
  doc["rank"] = rank;
  doc["groups"] = groups;
  doc["sines_per_latent"] = sines_per_latent;
  doc["trend"] = trend;
  doc["sensor_offsets"] = sensor_offsets;
  doc["noise"] = noise;
  doc["seed"] = seed;
  if (value_range) {
    doc["value_min"] = value_range->first;
    doc["value_max"] = value_range->second;
  }
  if (!sensor_ids.empty()) doc["sensor_ids"] = sensor_ids;
  if (!group_map.empty()) {
    nlohmann::json gm = nlohmann::json::object();
    for (const auto& [id, g] : group_map) gm[id] = g;
    doc["group_map"] = gm;
  }
  return doc;
}

}  // namespace commrec

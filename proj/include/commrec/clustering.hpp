#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "commrec/measurement.hpp"

namespace commrec {

/// Summary features of one sensor's history: mean, max, min, median,
/// sample variance (n-1 convention).
struct FeatureVector {
  std::string sensor;
  std::array<double, 5> v{};
};

/// Balanced partition of sensors. Centroids live in the standardized
/// feature space the solver ran in.
struct ClusterAssignment {
  int k = 0;
  std::map<std::string, int> membership;  // sensor id -> cluster
  Eigen::MatrixXd centroids;              // k x 5, standardized space
  double objective = 0.0;                 // k-means cost at convergence
  int iterations = 0;
  std::vector<double> cost_history;       // cost after each round

  std::vector<int> sizes() const;
  /// Member ids per cluster, each list ascending.
  std::vector<std::vector<std::string>> members() const;
};

/// One feature vector per sensor, in sensor order of the block.
/// Requires >= 2 samples and no missing (NaN) entries.
std::vector<FeatureVector> extract_features(const MeasurementBlock& history);

/// Balanced k-means: all cluster sizes in {floor(N/K), ceil(N/K)},
/// deterministic for a given seed, cost non-increasing across rounds.
ClusterAssignment cluster_balanced(const std::vector<FeatureVector>& features, int k,
                                   std::uint64_t seed);

nlohmann::json clusters_to_json(const ClusterAssignment& assignment);
ClusterAssignment clusters_from_json(const nlohmann::json& doc);

}  // namespace commrec

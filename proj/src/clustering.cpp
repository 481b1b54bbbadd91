#include "commrec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace commrec {

namespace {

constexpr int kMaxRounds = 300;

double sample_variance(const Eigen::VectorXd& x) {
  double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

double median(Eigen::VectorXd x) {
  std::sort(x.data(), x.data() + x.size());
  Eigen::Index n = x.size();
  return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// z-scores each feature across sensors; constant features collapse to 0.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd z = raw;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double mean = raw.col(j).mean();
    double var = raw.rows() > 1 ? (raw.col(j).array() - mean).square().sum() /
                                      static_cast<double>(raw.rows() - 1)
                                : 0.0;
    double sd = std::sqrt(var);
    if (sd > 0)
      z.col(j) = (raw.col(j).array() - mean) / sd;
    else
      z.col(j).setZero();
  }
  return z;
}

double kmeans_cost(const Eigen::MatrixXd& z, const std::vector<int>& member,
                   const Eigen::MatrixXd& centroids) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    cost += (z.row(i) - centroids.row(member[i])).squaredNorm();
  return cost;
}

Eigen::MatrixXd centroids_of(const Eigen::MatrixXd& z, const std::vector<int>& member, int k) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, z.cols());
  std::vector<int> n(k, 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    c.row(member[i]) += z.row(i);
    ++n[member[i]];
  }
  for (int j = 0; j < k; ++j)
    if (n[j] > 0) c.row(j) /= static_cast<double>(n[j]);
  return c;
}

// Greedy balanced assignment: repeatedly take the globally closest
// (unassigned point, eligible cluster) pair. Quota bookkeeping keeps the
// final sizes in {floor(N/K), ceil(N/K)} with exactly N mod K large
// clusters. The deficit guard never strands a cluster below floor.
std::vector<int> balanced_assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centroids,
                                 int k) {
  const int n = static_cast<int>(z.rows());
  const int floor_size = n / k;
  const int large_clusters = n % k;  // clusters allowed to reach floor+1

  Eigen::MatrixXd dist(n, k);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) dist(i, c) = (z.row(i) - centroids.row(c)).squaredNorm();

  std::vector<int> member(n, -1);
  std::vector<int> size(k, 0);
  int assigned = 0;
  int grown = 0;  // clusters already above floor
  while (assigned < n) {
    int deficit = 0;
    for (int c = 0; c < k; ++c) deficit += std::max(0, floor_size - size[c]);
    const int remaining = n - assigned;

    double best = std::numeric_limits<double>::infinity();
    int best_i = -1, best_c = -1;
    for (int i = 0; i < n; ++i) {
      if (member[i] >= 0) continue;
      for (int c = 0; c < k; ++c) {
        if (size[c] >= floor_size + (large_clusters > 0 ? 1 : 0)) continue;
        bool grows = size[c] >= floor_size;
        if (grows && grown >= large_clusters) continue;
        // Assigning away from a deficit cluster must leave enough points.
        int deficit_after = deficit - (size[c] < floor_size ? 1 : 0);
        if (remaining - 1 < deficit_after) continue;
        if (dist(i, c) < best) {
          best = dist(i, c);
          best_i = i;
          best_c = c;
        }
      }
    }
    member[best_i] = best_c;
    if (size[best_c] >= floor_size) ++grown;
    ++size[best_c];
    ++assigned;
  }
  return member;
}

}  // namespace

std::vector<int> ClusterAssignment::sizes() const {
  std::vector<int> out(k, 0);
  for (const auto& [id, c] : membership) ++out[c];
  return out;
}

std::vector<std::vector<std::string>> ClusterAssignment::members() const {
  std::vector<std::vector<std::string>> out(k);
  for (const auto& [id, c] : membership) out[c].push_back(id);
  return out;  // map iteration keeps each list sorted
}

std::vector<FeatureVector> extract_features(const MeasurementBlock& history) {
  if (history.rows() < 2)
    throw std::invalid_argument("features: need at least 2 samples per sensor");
  if (!history.values.allFinite())
    throw std::invalid_argument("features: history contains missing or non-finite values");
  std::vector<FeatureVector> out;
  out.reserve(history.sensor_ids.size());
  for (Eigen::Index i = 0; i < history.cols(); ++i) {
    Eigen::VectorXd col = history.values.col(i);
    FeatureVector f;
    f.sensor = history.sensor_ids[i];
    f.v = {col.mean(), col.maxCoeff(), col.minCoeff(), median(col), sample_variance(col)};
    out.push_back(std::move(f));
  }
  return out;
}

ClusterAssignment cluster_balanced(const std::vector<FeatureVector>& features, int k,
                                   std::uint64_t seed) {
  const int n = static_cast<int>(features.size());
  if (k < 1) throw std::invalid_argument("clustering: k must be >= 1");
  if (k > n) throw std::invalid_argument("clustering: k exceeds the number of sensors");

  // Work in sensor-id order so the result is independent of input order.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&features](int x, int y) {
    return features[x].sensor < features[y].sensor;
  });

  Eigen::MatrixXd raw(n, 5);
  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = features[order[i]].sensor;
    for (int j = 0; j < 5; ++j) raw(i, j) = features[order[i]].v[j];
  }
  if (!raw.allFinite()) throw std::invalid_argument("clustering: non-finite feature values");
  Eigen::MatrixXd z = standardize(raw);

  // Farthest-point init, seeded first pick, ties to the lowest sensor id.
  std::mt19937_64 rng(seed);
  std::vector<int> centers;
  centers.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
  Eigen::VectorXd min_dist(n);
  for (int i = 0; i < n; ++i) min_dist[i] = (z.row(i) - z.row(centers[0])).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    int far = 0;
    for (int i = 1; i < n; ++i)
      if (min_dist[i] > min_dist[far]) far = i;
    centers.push_back(far);
    for (int i = 0; i < n; ++i)
      min_dist[i] = std::min(min_dist[i], (z.row(i) - z.row(far)).squaredNorm());
  }
  Eigen::MatrixXd centroids(k, z.cols());
  for (int c = 0; c < k; ++c) centroids.row(c) = z.row(centers[c]);

  std::vector<int> member = balanced_assign(z, centroids, k);
  centroids = centroids_of(z, member, k);
  double cost = kmeans_cost(z, member, centroids);
  std::vector<double> history{cost};

  int round = 1;
  for (; round < kMaxRounds; ++round) {
    std::vector<int> next = balanced_assign(z, centroids, k);
    if (next == member) break;
    Eigen::MatrixXd next_centroids = centroids_of(z, next, k);
    double next_cost = kmeans_cost(z, next, next_centroids);
    if (next_cost > cost * (1.0 + 1e-12)) break;  // greedy step regressed; keep previous
    member = std::move(next);
    centroids = std::move(next_centroids);
    cost = next_cost;
    history.push_back(cost);
  }

  ClusterAssignment out;
  out.k = k;
  out.centroids = centroids;
  out.objective = cost;
  out.iterations = round;
  out.cost_history = std::move(history);
  for (int i = 0; i < n; ++i) out.membership[ids[i]] = member[i];
  return out;
}

nlohmann::json clusters_to_json(const ClusterAssignment& assignment) {
  nlohmann::json doc;
  doc["k"] = assignment.k;
  doc["objective"] = assignment.objective;
  doc["iterations"] = assignment.iterations;
  nlohmann::json membership = nlohmann::json::object();
  for (const auto& [id, c] : assignment.membership) membership[id] = c;
  doc["membership"] = membership;
  nlohmann::json centroids = nlohmann::json::array();
  for (Eigen::Index c = 0; c < assignment.centroids.rows(); ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < assignment.centroids.cols(); ++j)
      row.push_back(assignment.centroids(c, j));
    centroids.push_back(row);
  }
  doc["centroids"] = centroids;
  return doc;
}

ClusterAssignment clusters_from_json(const nlohmann::json& doc) {
  ClusterAssignment out;
  out.k = doc.at("k").get<int>();
  out.objective = doc.value("objective", 0.0);
  out.iterations = doc.value("iterations", 0);
  for (const auto& [id, c] : doc.at("membership").items()) out.membership[id] = c.get<int>();
  const auto& centroids = doc.at("centroids");
  if (!centroids.empty()) {
    out.centroids.resize(centroids.size(), centroids[0].size());
    for (Eigen::Index c = 0; c < out.centroids.rows(); ++c)
      for (Eigen::Index j = 0; j < out.centroids.cols(); ++j)
        out.centroids(c, j) = centroids[c][j].get<double>();
  }
  return out;
}

}  // namespace commrec

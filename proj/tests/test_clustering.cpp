#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "commrec/clustering.hpp"

using namespace commrec;

namespace {

MeasurementBlock block_from_columns(const std::vector<std::vector<double>>& columns) {
  MeasurementBlock block;
  const auto rows = static_cast<Eigen::Index>(columns.front().size());
  block.values.resize(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    block.sensor_ids.push_back("s" + std::to_string(i));
    for (Eigen::Index t = 0; t < rows; ++t)
      block.values(t, static_cast<Eigen::Index>(i)) = columns[i][static_cast<std::size_t>(t)];
  }
  for (Eigen::Index t = 0; t < rows; ++t) block.timestamps.push_back(t);
  return block;
}

// Independent reference: z-score, then k-means cost of a given partition.
Eigen::MatrixXd zscore(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd z = raw;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double mean = raw.col(j).mean();
    double sd = std::sqrt((raw.col(j).array() - mean).square().sum() /
                          static_cast<double>(raw.rows() - 1));
    if (sd > 0)
      z.col(j) = (raw.col(j).array() - mean) / sd;
    else
      z.col(j).setZero();
  }
  return z;
}

double partition_cost(const Eigen::MatrixXd& z, const std::vector<int>& member, int k) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, z.cols());
  std::vector<int> n(k, 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    c.row(member[static_cast<std::size_t>(i)]) += z.row(i);
    ++n[member[static_cast<std::size_t>(i)]];
  }
  for (int j = 0; j < k; ++j) c.row(j) /= static_cast<double>(n[j]);
  double cost = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    cost += (z.row(i) - c.row(member[static_cast<std::size_t>(i)])).squaredNorm();
  return cost;
}

std::vector<FeatureVector> random_features(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FeatureVector> out;
  for (int i = 0; i < n; ++i) {
    FeatureVector f;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    f.sensor = buf;
    double lo = gauss(rng), hi = lo + std::abs(gauss(rng)) + 0.1;
    f.v = {0.5 * (lo + hi), hi, lo, 0.5 * (lo + hi) + 0.05 * gauss(rng),
           std::abs(gauss(rng))};
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("extract_features matches hand computations") {
  MeasurementBlock block = block_from_columns({{5, 5, 5, 5}, {1, 2, 3, 4}});
  auto features = extract_features(block);
  REQUIRE(features.size() == 2);

  // Constant series: (5, 5, 5, 5, 0).
  CHECK(features[0].v[0] == doctest::Approx(5.0));
  CHECK(features[0].v[1] == doctest::Approx(5.0));
  CHECK(features[0].v[2] == doctest::Approx(5.0));
  CHECK(features[0].v[3] == doctest::Approx(5.0));
  CHECK(features[0].v[4] == doctest::Approx(0.0));

  // 1..4: mean 2.5, max 4, min 1, median 2.5, sample variance 5/3.
  CHECK(features[1].v[0] == doctest::Approx(2.5));
  CHECK(features[1].v[1] == doctest::Approx(4.0));
  CHECK(features[1].v[2] == doctest::Approx(1.0));
  CHECK(features[1].v[3] == doctest::Approx(2.5));
  CHECK(features[1].v[4] == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("extract_features rejects bad history") {
  MeasurementBlock one_sample = block_from_columns({{1.0}});
  CHECK_THROWS_AS(extract_features(one_sample), std::invalid_argument);

  MeasurementBlock with_gap = block_from_columns({{1.0, 2.0, 3.0}});
  with_gap.values(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(extract_features(with_gap), std::invalid_argument);
}

TEST_CASE("extract_features handles the paper-scale horizon") {
  std::vector<double> series(1440);
  for (int t = 0; t < 1440; ++t) series[static_cast<std::size_t>(t)] = std::sin(t / 48.0);
  auto features = extract_features(block_from_columns({series}));
  REQUIRE(features.size() == 1);
  for (double v : features[0].v) CHECK(std::isfinite(v));
  CHECK(features[0].v[2] <= features[0].v[3]);
  CHECK(features[0].v[3] <= features[0].v[1]);
}

TEST_CASE("balance invariant: exact and uneven division") {
  SUBCASE("N=10 K=5 gives all sizes 2") {
    auto clusters = cluster_balanced(random_features(10, 1), 5, 7);
    for (int s : clusters.sizes()) CHECK(s == 2);
  }
  SUBCASE("N=11 K=5 gives four 2s and one 3") {
    auto clusters = cluster_balanced(random_features(11, 2), 5, 7);
    std::vector<int> sizes = clusters.sizes();
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 2, 2, 2, 3});
  }
  SUBCASE("random N and K stay within floor/ceil") {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 20; ++round) {
      int n = 5 + static_cast<int>(rng() % 40);
      int k = 2 + static_cast<int>(rng() % 6);
      if (k > n) k = n;
      auto clusters = cluster_balanced(random_features(n, rng()), k, rng());
      int floor_size = n / k, ceil_size = (n + k - 1) / k;
      for (int s : clusters.sizes()) {
        CHECK(s >= floor_size);
        CHECK(s <= ceil_size);
      }
    }
  }
}

TEST_CASE("square fixture: greedy result equals the brute-force optimum") {
  // Four feature vectors forming a square in the (mean, variance) plane;
  // the other features are constant and vanish after standardization.
  std::vector<FeatureVector> features(4);
  const double coords[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int i = 0; i < 4; ++i) {
    features[static_cast<std::size_t>(i)].sensor = "s" + std::to_string(i);
    features[static_cast<std::size_t>(i)].v = {coords[i][0], 10.0, 0.0, 5.0, coords[i][1]};
  }

  Eigen::MatrixXd raw(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) raw(i, j) = features[static_cast<std::size_t>(i)].v[j];
  Eigen::MatrixXd z = zscore(raw);

  // All three balanced 2-2 partitions, brute force.
  const std::vector<std::vector<int>> partitions = {
      {0, 0, 1, 1}, {0, 1, 0, 1}, {0, 1, 1, 0}};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : partitions) best = std::min(best, partition_cost(z, p, 2));

  for (std::uint64_t seed : {0ULL, 1ULL, 5ULL, 9ULL}) {
    auto clusters = cluster_balanced(features, 2, seed);
    CHECK(clusters.objective == doctest::Approx(best).epsilon(1e-9));
    // The optimal splits pair adjacent corners, never the diagonal.
    int s0 = clusters.membership.at("s0");
    int s2 = clusters.membership.at("s2");
    CHECK(s0 != s2);
  }
}

TEST_CASE("objective is non-increasing across rounds") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto clusters = cluster_balanced(random_features(40, seed + 100), 5, seed);
    for (std::size_t i = 1; i < clusters.cost_history.size(); ++i)
      CHECK(clusters.cost_history[i] <=
            clusters.cost_history[i - 1] * (1.0 + 1e-9));
  }
}

TEST_CASE("input order does not change the partition") {
  std::vector<FeatureVector> features = random_features(23, 11);
  auto base = cluster_balanced(features, 4, 5);
  std::mt19937_64 rng(99);
  std::shuffle(features.begin(), features.end(), rng);
  auto shuffled = cluster_balanced(features, 4, 5);
  CHECK(base.membership == shuffled.membership);
}

TEST_CASE("degenerate and error cases") {
  CHECK_THROWS_AS(cluster_balanced(random_features(3, 1), 4, 0), std::invalid_argument);

  // All-identical features: still balanced, no error.
  std::vector<FeatureVector> same(6);
  for (int i = 0; i < 6; ++i) {
    same[static_cast<std::size_t>(i)].sensor = "s" + std::to_string(i);
    same[static_cast<std::size_t>(i)].v = {1, 2, 0, 1, 0.5};
  }
  auto clusters = cluster_balanced(same, 3, 0);
  for (int s : clusters.sizes()) CHECK(s == 2);
  CHECK(clusters.objective == doctest::Approx(0.0));
}

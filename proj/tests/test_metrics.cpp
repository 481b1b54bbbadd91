#include <doctest.h>

#include <stdexcept>

#include <random>

#include "commrec/metrics.hpp"

using namespace commrec;

TEST_CASE("perfect recovery scores zero everywhere") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Random(6, 4).array() + 2.0;
  MaskMatrix mask = MaskMatrix::Constant(6, 4, true);
  mask(1, 1) = mask(3, 2) = false;
  MetricTriple t = score(truth, truth, mask);
  CHECK(t.mae == doctest::Approx(0.0));
  CHECK(t.rmse == doctest::Approx(0.0));
  REQUIRE(t.mape.has_value());
  CHECK(*t.mape == doctest::Approx(0.0));
  CHECK(t.missing_count == 2);
}

TEST_CASE("hand-computed two-cell example") {
  // Errors +1 and -1 at truths 10 and 20: MAE = 1, RMSE = 1, MAPE = 7.5%.
  Eigen::MatrixXd truth(1, 2), recovered(1, 2);
  truth << 10.0, 20.0;
  recovered << 11.0, 19.0;
  MaskMatrix mask = MaskMatrix::Constant(1, 2, false);
  MetricTriple t = score(truth, recovered, mask);
  CHECK(t.mae == doctest::Approx(1.0));
  CHECK(t.rmse == doctest::Approx(1.0));
  CHECK(*t.mape == doctest::Approx(7.5));
}

TEST_CASE("observed cells never influence the score") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Random(8, 8).array() + 3.0;
  MaskMatrix mask = MaskMatrix::Constant(8, 8, true);
  mask(0, 0) = mask(4, 4) = mask(7, 1) = false;
  Eigen::MatrixXd recovered = truth;
  recovered(0, 0) += 0.5;
  MetricTriple base = score(truth, recovered, mask);

  Eigen::MatrixXd poked = recovered;
  for (Eigen::Index j = 0; j < 8; ++j)
    for (Eigen::Index i = 0; i < 8; ++i)
      if (mask(i, j)) poked(i, j) = 1e9;  // garbage at every observed cell
  MetricTriple after = score(truth, poked, mask);
  CHECK(base.mae == after.mae);
  CHECK(base.rmse == after.rmse);
  CHECK(*base.mape == *after.mape);
}

TEST_CASE("MAE <= RMSE over random error vectors") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss;
  for (int round = 0; round < 1000; ++round) {
    const int n = 2 + static_cast<int>(rng() % 30);
    Eigen::MatrixXd truth(1, n), recovered(1, n);
    for (int i = 0; i < n; ++i) {
      truth(0, i) = 5.0 + gauss(rng);
      recovered(0, i) = truth(0, i) + gauss(rng);
    }
    MaskMatrix mask = MaskMatrix::Constant(1, n, false);
    MetricTriple t = score(truth, recovered, mask);
    CHECK(t.mae <= t.rmse + 1e-12);
  }
}

TEST_CASE("equal absolute errors make MAE equal RMSE") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, 4);
  Eigen::MatrixXd recovered(1, 4);
  recovered << 2.0, -2.0, 2.0, -2.0;
  MaskMatrix mask = MaskMatrix::Constant(1, 4, false);
  MetricTriple t = score(truth, recovered, mask);
  CHECK(t.mae == doctest::Approx(t.rmse));
}

TEST_CASE("MAPE guard excludes near-zero truths") {
  Eigen::MatrixXd truth(1, 3), recovered(1, 3);
  truth << 1e-9, 10.0, 0.0;
  recovered << 1.0, 11.0, 1.0;
  MaskMatrix mask = MaskMatrix::Constant(1, 3, false);
  MetricTriple t = score(truth, recovered, mask);
  CHECK(t.mape_excluded == 2);
  CHECK(*t.mape == doctest::Approx(10.0));

  // All truths below the guard: MAPE undefined.
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Constant(1, 3, 1e-9);
  MetricTriple u = score(tiny, recovered, mask);
  CHECK(!u.mape.has_value());
  CHECK(u.mape_excluded == 3);
}

TEST_CASE("score requires at least one missing entry") {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(2, 2);
  MaskMatrix mask = MaskMatrix::Constant(2, 2, true);
  CHECK_THROWS_AS(score(truth, truth, mask), std::invalid_argument);

  Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(3, 2);
  MaskMatrix mask2 = MaskMatrix::Constant(2, 2, false);
  CHECK_THROWS_AS(score(truth, wrong, mask2), std::invalid_argument);
}

TEST_CASE("pooled combined MAE is the count-weighted mean of cluster MAEs") {
  MetricAccumulator a, b, pooled;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 40; ++i) {
    double t = 5 + gauss(rng), r = t + gauss(rng);
    a.add(t, r);
    pooled.add(t, r);
  }
  for (int i = 0; i < 15; ++i) {
    double t = 5 + gauss(rng), r = t + 2.0 * gauss(rng);
    b.add(t, r);
    pooled.add(t, r);
  }
  MetricTriple ta = a.finalize(), tb = b.finalize(), tp = pooled.finalize();
  const double weighted = (ta.mae * 40 + tb.mae * 15) / 55.0;
  CHECK(tp.mae == doctest::Approx(weighted).epsilon(1e-12));

  MetricAccumulator merged = a;
  merged.merge(b);
  CHECK(merged.finalize().mae == doctest::Approx(tp.mae).epsilon(1e-12));
}

TEST_CASE("improvement percentages match the published arithmetic") {
  // Voltage combined row: (0.002784 - 0.002580) / 0.002784 = 7.33%.
  CHECK(improvement(0.002580, 0.002784) == doctest::Approx(7.33).epsilon(0.0015));
  // Power combined row recomputes to 12.91% (not the rounded 12.93).
  CHECK(improvement(2.315946, 2.659312) == doctest::Approx(12.91).epsilon(0.0015));

  CHECK(improvement(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(improvement(2.0, 1.0) < 0.0);  // proposed worse -> negative
  CHECK_THROWS_AS(improvement(1.0, 0.0), std::invalid_argument);
}

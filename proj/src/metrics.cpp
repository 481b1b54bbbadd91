#include "commrec/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace commrec {

void MetricAccumulator::add(double truth, double recovered) {
  const double d = recovered - truth;
  abs_sum += std::abs(d);
  sq_sum += d * d;
  ++n;
  if (std::abs(truth) >= kMapeEpsilon) {
    ape_sum += std::abs(d / truth);
    ++n_mape;
  }
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  abs_sum += other.abs_sum;
  sq_sum += other.sq_sum;
  ape_sum += other.ape_sum;
  n += other.n;
  n_mape += other.n_mape;
}

MetricTriple MetricAccumulator::finalize() const {
  if (n == 0) throw std::invalid_argument("metrics: no missing entries to score");
  MetricTriple out;
  out.mae = abs_sum / static_cast<double>(n);
  out.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  out.missing_count = n;
  out.mape_excluded = n - n_mape;
  if (n_mape > 0) out.mape = 100.0 * ape_sum / static_cast<double>(n_mape);
  return out;
}

MetricTriple score(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& recovered,
                   const MaskMatrix& delivered) {
  if (truth.rows() != recovered.rows() || truth.cols() != recovered.cols() ||
      truth.rows() != delivered.rows() || truth.cols() != delivered.cols())
    throw std::invalid_argument("metrics: shape mismatch");
  MetricAccumulator acc;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (!delivered(i, j)) acc.add(truth(i, j), recovered(i, j));
  return acc.finalize();
}

double improvement(double proposed, double baseline) {
  if (!(baseline > 0)) throw std::invalid_argument("metrics: baseline must be > 0");
  return 100.0 * (baseline - proposed) / baseline;
}

}  // namespace commrec

#include "commrec/osvt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

namespace commrec {

namespace {

// Relative spread below which the observed entries count as constant.
constexpr double kConstantTol = 1e-13;

double missing_block_norm(const Eigen::MatrixXd& m, const MaskMatrix& observed) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!observed(i, j)) sum += m(i, j) * m(i, j);
  return std::sqrt(sum);
}

double observed_residual(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& y_obs,
                         const MaskMatrix& observed) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < estimate.cols(); ++j)
    for (Eigen::Index i = 0; i < estimate.rows(); ++i)
      if (observed(i, j)) {
        double d = estimate(i, j) - y_obs(i, j);
        sum += d * d;
      }
  return std::sqrt(sum);
}

}  // namespace

void OsvtConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("osvt: max_iters must be >= 1");
  if (!(rel_tol > 0)) throw std::invalid_argument("osvt: rel_tol must be > 0");
  if (min_rank_floor < 1) throw std::invalid_argument("osvt: min_rank_floor must be >= 1");
}

NormalizeResult normalize(const Eigen::MatrixXd& x, const MaskMatrix& observed) {
  if (x.rows() != observed.rows() || x.cols() != observed.cols())
    throw std::invalid_argument("normalize: value/mask shape mismatch");
  if (!observed.any()) throw std::invalid_argument("normalize: no observed entries");

  double a = std::numeric_limits<double>::infinity();
  double b = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (observed(i, j)) {
        if (!std::isfinite(x(i, j)))
          throw std::invalid_argument("normalize: non-finite observed entry");
        a = std::min(a, x(i, j));
        b = std::max(b, x(i, j));
      }

  NormalizeResult out;
  out.a = a;
  out.b = b;
  out.y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const double half_span = 0.5 * (b - a);
  if (half_span <= kConstantTol * std::max(std::abs(a), 1.0)) {
    out.constant = true;
    return out;  // all observed values equal; Y stays zero
  }
  const double mid = 0.5 * (a + b);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (observed(i, j)) out.y(i, j) = (x(i, j) - mid) / half_span;
  return out;
}

Eigen::MatrixXd rescale(const Eigen::MatrixXd& y, double a, double b) {
  return (0.5 * (b - a) * y).array() + 0.5 * (a + b);
}

double optimal_threshold(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("osvt: empty matrix");
  const double zeta = static_cast<double>(std::min(rows, cols)) /
                      static_cast<double>(std::max(rows, cols));
  return std::sqrt(2.0 * (zeta + 1.0) +
                   8.0 * zeta / ((zeta + 1.0) + std::sqrt(zeta * zeta + 14.0 * zeta + 1.0)));
}

SinglePassResult osvt_single_pass(const Eigen::MatrixXd& y, const OsvtConfig& config) {
  if (!y.allFinite()) throw std::runtime_error("osvt: non-finite input to SVD");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();

  double threshold = optimal_threshold(y.rows(), y.cols());
  if (config.threshold_scale == OsvtConfig::ThresholdScale::MedianScaled) {
    Eigen::VectorXd sorted = sigma;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const Eigen::Index n = sorted.size();
    const double med =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    threshold *= med / 0.85;
  }

  int retained = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > threshold) ++retained;

  SinglePassResult out;
  out.threshold = threshold;
  out.rank_floored = retained == 0;
  if (retained == 0)
    retained = std::min<int>(config.min_rank_floor, static_cast<int>(sigma.size()));
  out.retained_rank = retained;
  out.y_hat = svd.matrixU().leftCols(retained) *
              sigma.head(retained).asDiagonal() *
              svd.matrixV().leftCols(retained).transpose();
  return out;
}

RecoveryResult recover(const Eigen::MatrixXd& x, const MaskMatrix& observed,
                       const OsvtConfig& config) {
  config.validate();
  NormalizeResult norm = normalize(x, observed);

  RecoveryResult result;
  result.a = norm.a;
  result.b = norm.b;
  result.constant_input = norm.constant;

  if (norm.constant) {
    result.reconstruction = Eigen::MatrixXd::Constant(x.rows(), x.cols(), norm.a);
    result.retained_rank = 1;
    result.converged = true;
    return result;
  }

  const bool any_missing = !observed.all();

  if (config.mode == OsvtConfig::Mode::PaperLiteralSinglePass) {
    SinglePassResult pass = osvt_single_pass(norm.y, config);
    result.reconstruction = rescale(pass.y_hat, norm.a, norm.b);
    result.retained_rank = pass.retained_rank;
    result.iterations = 1;
    result.converged = true;
    result.observed_residual_history.push_back(
        observed_residual(pass.y_hat, norm.y, observed));
    return result;
  }

  // Iterative masked mode: threshold pass + observed-entry projection.
  Eigen::MatrixXd iterate = norm.y;  // missing cells hold the midpoint 0
  Eigen::MatrixXd prev_estimate = norm.y;
  SinglePassResult pass;
  bool first = true;
  for (int it = 0; it < config.max_iters; ++it) {
    pass = osvt_single_pass(iterate, config);
    result.iterations = it + 1;
    result.observed_residual_history.push_back(
        observed_residual(pass.y_hat, norm.y, observed));

    Eigen::MatrixXd diff = pass.y_hat - prev_estimate;
    const double change = missing_block_norm(diff, observed);
    const double scale = std::max(missing_block_norm(prev_estimate, observed), 1e-12);
    result.final_rel_change = change / scale;
    prev_estimate = pass.y_hat;

    // Projection: put the observed values back.
    iterate = pass.y_hat;
    for (Eigen::Index j = 0; j < iterate.cols(); ++j)
      for (Eigen::Index i = 0; i < iterate.rows(); ++i)
        if (observed(i, j)) iterate(i, j) = norm.y(i, j);

    if (!any_missing || (!first && result.final_rel_change < config.rel_tol)) {
      result.converged = true;
      break;
    }
    first = false;
  }
  result.retained_rank = pass.retained_rank;

  result.reconstruction = rescale(prev_estimate, norm.a, norm.b);
  // The returned matrix preserves the observations exactly.
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (observed(i, j)) result.reconstruction(i, j) = x(i, j);
  return result;
}

}  // namespace commrec

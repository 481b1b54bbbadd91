#pragma once

#include <optional>

#include "commrec/types.hpp"

namespace commrec {

/// Truth magnitudes below this are excluded from MAPE.
inline constexpr double kMapeEpsilon = 1e-6;

struct MetricTriple {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape;  // percent; empty when undefined
  long long missing_count = 0;
  long long mape_excluded = 0;
};

/// Streaming accumulator so entries can be pooled across clusters/trials
/// in a fixed order.
struct MetricAccumulator {
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double ape_sum = 0.0;
  long long n = 0;
  long long n_mape = 0;

  void add(double truth, double recovered);
  void merge(const MetricAccumulator& other);
  MetricTriple finalize() const;  // throws if n == 0
};

/// MAE/RMSE/MAPE over the cells where mask is false (missing entries only).
/// Throws std::invalid_argument on shape mismatch or zero missing entries.
MetricTriple score(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& recovered,
                   const MaskMatrix& delivered);

/// 100 * (baseline - proposed) / baseline. Throws if baseline <= 0.
double improvement(double proposed, double baseline);

}  // namespace commrec

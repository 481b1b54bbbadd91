#pragma once

#include <vector>

#include "commrec/types.hpp"

namespace commrec {

struct OsvtConfig {
  enum class Mode {
    IterativeMasked,         // threshold pass + observed-entry projection loop
    PaperLiteralSinglePass,  // one threshold pass on the zero-filled matrix
  };
  enum class ThresholdScale {
    Raw,           // compare singular values against sigma_th directly
    MedianScaled,  // sigma_th * (median singular value / 0.85)
  };

  Mode mode = Mode::IterativeMasked;
  int max_iters = 300;
  double rel_tol = 1e-6;
  int min_rank_floor = 1;
  ThresholdScale threshold_scale = ThresholdScale::Raw;

  void validate() const;  // throws std::invalid_argument
};

struct NormalizeResult {
  Eigen::MatrixXd y;  // observed cells scaled into [-1, 1], missing cells 0
  double a = 0.0;     // min over observed cells
  double b = 0.0;     // max over observed cells
  bool constant = false;  // a == b shortcut
};

/// Scales observed cells into [-1, 1]: y = (x - (a+b)/2) / ((b-a)/2) with
/// a/b the observed min/max. Missing cells are set to 0 (the midpoint).
/// Throws if no cell is observed.
NormalizeResult normalize(const Eigen::MatrixXd& x, const MaskMatrix& observed);

/// Inverse of normalize on every cell.
Eigen::MatrixXd rescale(const Eigen::MatrixXd& y, double a, double b);

/// Hard-threshold level for an m x n matrix. Uses the aspect ratio
/// zeta = min(m,n)/max(m,n), so the result is orientation-invariant.
double optimal_threshold(Eigen::Index rows, Eigen::Index cols);

struct SinglePassResult {
  Eigen::MatrixXd y_hat;
  int retained_rank = 0;
  bool rank_floored = false;  // thresholding emptied S; kept top triplets
  double threshold = 0.0;     // effective (possibly scaled) level
};

/// SVD, keep singular triplets with sigma > threshold, recompose. If none
/// survive, the top min_rank_floor triplets are kept instead.
SinglePassResult osvt_single_pass(const Eigen::MatrixXd& y, const OsvtConfig& config);

struct RecoveryResult {
  Eigen::MatrixXd reconstruction;
  int retained_rank = 0;
  int iterations = 0;
  double final_rel_change = 0.0;
  bool converged = false;
  bool constant_input = false;
  double a = 0.0;
  double b = 0.0;
  /// Frobenius norm of the observed-cell residual of each pre-projection
  /// iterate (convergence diagnostic).
  std::vector<double> observed_residual_history;
};

/// Recovers missing entries of x. IterativeMasked repeats
/// {threshold pass; overwrite observed cells} until the missing-cell block
/// stabilizes, then rescales and restores the original observations
/// exactly. PaperLiteralSinglePass does one pass and rescales.
/// Non-convergence is reported in the result, not thrown.
RecoveryResult recover(const Eigen::MatrixXd& x, const MaskMatrix& observed,
                       const OsvtConfig& config);

}  // namespace commrec

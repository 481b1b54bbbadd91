#pragma once

#include <string>
#include <utility>
#include <vector>

#include "commrec/types.hpp"

namespace commrec {

/// Geometry of a multi-sensor Page matrix: column (sensor i, window w) holds
/// samples t in [w*L, (w+1)*L) of sensor i, columns grouped per sensor in
/// sensor order. Column index = i * windows + w.
struct PageLayout {
  int rows = 0;     // L, samples per segment
  int windows = 0;  // W, segments per sensor
  std::vector<std::string> sensors;
  int excluded_samples = 0;  // trailing T - L*W samples left out

  int t_used() const { return rows * windows; }
  int cols() const { return static_cast<int>(sensors.size()) * windows; }
  std::pair<int, int> column_source(int col) const {  // -> (sensor idx, window)
    return {col / windows, col % windows};
  }
};

struct PagePair {
  Eigen::MatrixXd values;  // L x (N*W); masked cells are NaN
  MaskMatrix mask;
};

/// Folds the first L*W rows of a T x N block into Page form. Requires
/// L >= 2 and L*W <= T. Masked source cells become NaN + mask=false.
std::pair<PagePair, PageLayout> to_page(const Eigen::MatrixXd& block, const MaskMatrix& mask,
                                        const std::vector<std::string>& sensors, int rows,
                                        int windows);

/// Inverse transform: recovers the T_used x N block. Exact round trip
/// when the page values are unmodified.
Eigen::MatrixXd from_page(const Eigen::MatrixXd& page, const PageLayout& layout);
MaskMatrix mask_from_page(const MaskMatrix& page_mask, const PageLayout& layout);

}  // namespace commrec

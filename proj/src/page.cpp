#include "commrec/page.hpp"

#include <limits>
#include <stdexcept>

namespace commrec {

std::pair<PagePair, PageLayout> to_page(const Eigen::MatrixXd& block, const MaskMatrix& mask,
                                        const std::vector<std::string>& sensors, int rows,
                                        int windows) {
  if (rows < 2) throw std::invalid_argument("page: segment length L must be >= 2");
  if (windows < 1) throw std::invalid_argument("page: window count W must be >= 1");
  const long long t_used = static_cast<long long>(rows) * windows;
  if (t_used > block.rows())
    throw std::invalid_argument("page: L*W exceeds the available horizon");
  if (block.rows() != mask.rows() || block.cols() != mask.cols())
    throw std::invalid_argument("page: value/mask shape mismatch");
  if (static_cast<Eigen::Index>(sensors.size()) != block.cols())
    throw std::invalid_argument("page: sensor list does not match block width");

  PageLayout layout;
  layout.rows = rows;
  layout.windows = windows;
  layout.sensors = sensors;
  layout.excluded_samples = static_cast<int>(block.rows() - t_used);

  PagePair page;
  page.values.resize(rows, layout.cols());
  page.mask.resize(rows, layout.cols());
  constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
  for (int c = 0; c < layout.cols(); ++c) {
    auto [i, w] = layout.column_source(c);
    for (int j = 0; j < rows; ++j) {
      const Eigen::Index t = static_cast<Eigen::Index>(w) * rows + j;
      const bool present = mask(t, i);
      page.mask(j, c) = present;
      page.values(j, c) = present ? block(t, i) : kMissing;
    }
  }
  return {std::move(page), std::move(layout)};
}

Eigen::MatrixXd from_page(const Eigen::MatrixXd& page, const PageLayout& layout) {
  if (page.rows() != layout.rows || page.cols() != layout.cols())
    throw std::invalid_argument("page: recovered matrix does not match the layout");
  Eigen::MatrixXd block(layout.t_used(), static_cast<Eigen::Index>(layout.sensors.size()));
  for (int c = 0; c < layout.cols(); ++c) {
    auto [i, w] = layout.column_source(c);
    for (int j = 0; j < layout.rows; ++j)
      block(static_cast<Eigen::Index>(w) * layout.rows + j, i) = page(j, c);
  }
  return block;
}

MaskMatrix mask_from_page(const MaskMatrix& page_mask, const PageLayout& layout) {
  if (page_mask.rows() != layout.rows || page_mask.cols() != layout.cols())
    throw std::invalid_argument("page: mask does not match the layout");
  MaskMatrix block(layout.t_used(), static_cast<Eigen::Index>(layout.sensors.size()));
  for (int c = 0; c < layout.cols(); ++c) {
    auto [i, w] = layout.column_source(c);
    for (int j = 0; j < layout.rows; ++j)
      block(static_cast<Eigen::Index>(w) * layout.rows + j, i) = page_mask(j, c);
  }
  return block;
}

}  // namespace commrec

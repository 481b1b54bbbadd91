#pragma once

#include <string>
#include <vector>

#include "commrec/types.hpp"

namespace commrec {

/// T x N time-series block. Column order follows sensor_ids. Missing
/// entries (when a block carries gaps) are NaN.
struct MeasurementBlock {
  std::vector<std::string> sensor_ids;
  std::vector<long long> timestamps;  // one per row
  Eigen::MatrixXd values;             // rows() == timestamps.size()

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Column index of a sensor id, -1 if absent.
  int column_of(const std::string& sensor) const;
};

/// Reads `timestamp,<id>,...` CSV. Empty fields become NaN.
MeasurementBlock read_measurements_csv(const std::string& path);

/// Writes the same schema. When mask is given, entries with mask=false are
/// written as empty fields.
void write_measurements_csv(const std::string& path, const MeasurementBlock& block,
                            const MaskMatrix* mask = nullptr);

/// 0/1 CSV aligned with the measurement schema (1 = delivered).
void write_mask_csv(const std::string& path, const std::vector<std::string>& sensor_ids,
                    const std::vector<long long>& timestamps, const MaskMatrix& delivered);

struct MaskCsv {
  std::vector<std::string> sensor_ids;
  std::vector<long long> timestamps;
  MaskMatrix delivered;
};
MaskCsv read_mask_csv(const std::string& path);

}  // namespace commrec

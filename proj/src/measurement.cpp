#include "commrec/measurement.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace commrec {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

void write_value(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

int MeasurementBlock::column_of(const std::string& sensor) const {
  for (std::size_t i = 0; i < sensor_ids.size(); ++i)
    if (sensor_ids[i] == sensor) return static_cast<int>(i);
  return -1;
}

MeasurementBlock read_measurements_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "timestamp")
    throw std::runtime_error("csv: expected header 'timestamp,<sensor>,...' in '" + path + "'");

  MeasurementBlock block;
  block.sensor_ids.assign(header.begin() + 1, header.end());
  const std::size_t n = block.sensor_ids.size();

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != n + 1)
      throw std::runtime_error("csv: row " + std::to_string(rows.size() + 2) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(n + 1));
    block.timestamps.push_back(std::stoll(fields[0]));
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i)
      row[i] = fields[i + 1].empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : std::stod(fields[i + 1]);
    rows.push_back(std::move(row));
  }
  block.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      block.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
  return block;
}

void write_measurements_csv(const std::string& path, const MeasurementBlock& block,
                            const MaskMatrix* mask) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& id : block.sensor_ids) out << "," << id;
  out << "\n";
  for (Eigen::Index t = 0; t < block.rows(); ++t) {
    out << block.timestamps[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < block.cols(); ++i) {
      out << ",";
      const double v = block.values(t, i);
      const bool present = (mask == nullptr || (*mask)(t, i)) && !std::isnan(v);
      if (present) write_value(out, v);
    }
    out << "\n";
  }
}

void write_mask_csv(const std::string& path, const std::vector<std::string>& sensor_ids,
                    const std::vector<long long>& timestamps, const MaskMatrix& delivered) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& id : sensor_ids) out << "," << id;
  out << "\n";
  for (Eigen::Index t = 0; t < delivered.rows(); ++t) {
    out << timestamps[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < delivered.cols(); ++i) out << "," << (delivered(t, i) ? 1 : 0);
    out << "\n";
  }
}

MaskCsv read_mask_csv(const std::string& path) {
  MeasurementBlock raw = read_measurements_csv(path);
  MaskCsv mask;
  mask.sensor_ids = raw.sensor_ids;
  mask.timestamps = raw.timestamps;
  mask.delivered.resize(raw.rows(), raw.cols());
  for (Eigen::Index t = 0; t < raw.rows(); ++t)
    for (Eigen::Index i = 0; i < raw.cols(); ++i) mask.delivered(t, i) = raw.values(t, i) != 0.0;
  return mask;
}

}  // namespace commrec

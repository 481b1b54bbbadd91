#pragma once

#include <Eigen/Dense>

namespace commrec {

/// Dense boolean mask, same orientation as the value matrix it annotates
/// (true = entry present/delivered).
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace commrec

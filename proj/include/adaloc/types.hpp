#pragma once

#include <Eigen/Dense>

namespace adaloc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "adaloc 0.1.0";

}  // namespace adaloc

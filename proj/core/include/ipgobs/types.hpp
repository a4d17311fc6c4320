#pragma once

#include <Eigen/Dense>

namespace ipgobs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace ipgobs

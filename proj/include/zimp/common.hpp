#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace zimp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Eigen::Index;

}  // namespace zimp

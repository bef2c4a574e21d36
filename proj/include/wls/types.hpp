#pragma once

#include <Eigen/Dense>

namespace wls {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace wls

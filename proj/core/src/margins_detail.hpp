#pragma once

#include <Eigen/Dense>

namespace diagnet::detail {

struct L2Result {
  Eigen::VectorXd w;
  Eigen::VectorXd nu;
  int sweeps = 0;
};

/// min 0.5 ||w||^2 s.t. Z^T w >= 1 for the columns of Z (d x N). Caller
/// guarantees strict feasibility. Throws SolverError if the dual does not settle.
L2Result l2_on_columns(const Eigen::MatrixXd& z);

}  // namespace diagnet::detail

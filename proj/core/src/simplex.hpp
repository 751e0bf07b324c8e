#pragma once

#include <Eigen/Dense>

#include <vector>

namespace diagnet::detail {

/// min c.x  s.t.  A x = b, x >= 0 (b may have any sign; rows are flipped).
struct StandardFormLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd duals;  // y with A^T y <= c at optimality
  std::vector<Eigen::Index> basis;
  int pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended for
/// the tiny problems in this library (a few dozen columns).
LpResult solve_lp(const StandardFormLp& lp, double tol = 1e-11, int max_pivots = 100000);

}  // namespace diagnet::detail

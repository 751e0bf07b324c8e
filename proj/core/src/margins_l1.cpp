#include <cmath>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"
#include "simplex.hpp"

namespace diagnet {

namespace {

constexpr double kOptimalBand = 1e-9;
constexpr double kVertexGap = 1e-6;

// Standard form over (w+, w-, s): Z^T (w+ - w-) - s = 1.
detail::StandardFormLp l1_program(const Eigen::MatrixXd& z) {
  const Eigen::Index d = z.rows();
  const Eigen::Index n = z.cols();
  detail::StandardFormLp lp;
  lp.A.setZero(n, 2 * d + n);
  lp.A.leftCols(d) = z.transpose();
  lp.A.middleCols(d, d) = -z.transpose();
  lp.A.rightCols(n) = -Eigen::MatrixXd::Identity(n, n);
  lp.b = Eigen::VectorXd::Ones(n);
  lp.c = Eigen::VectorXd::Zero(2 * d + n);
  lp.c.head(2 * d).setOnes();
  return lp;
}

// Ranges of each w_i over the optimal face {feasible, ||w||_1 <= opt + band}.
// A range wider than kVertexGap means another optimal vertex exists.
bool optimal_face_is_point(const Eigen::MatrixXd& z, double optimum) {
  const Eigen::Index d = z.rows();
  const Eigen::Index n = z.cols();
  const detail::StandardFormLp base = l1_program(z);
  // Extra row: sum(w+ + w-) + t = opt + band, with slack column t.
  detail::StandardFormLp lp;
  const Eigen::Index cols = base.A.cols() + 1;
  lp.A.setZero(n + 1, cols);
  lp.A.topLeftCorner(n, base.A.cols()) = base.A;
  lp.A.row(n).head(2 * d).setOnes();
  lp.A(n, cols - 1) = 1.0;
  lp.b.resize(n + 1);
  lp.b.head(n) = base.b;
  lp.b[n] = optimum + kOptimalBand;

  for (Eigen::Index i = 0; i < d; ++i) {
    double lo = 0.0;
    double hi = 0.0;
    for (const double sign : {1.0, -1.0}) {
      lp.c = Eigen::VectorXd::Zero(cols);
      lp.c[i] = sign;
      lp.c[d + i] = -sign;
      const detail::LpResult r = detail::solve_lp(lp);
      if (r.status != detail::LpStatus::optimal) {
        throw SolverError("l1 degeneracy probe failed");
      }
      const double wi = r.x[i] - r.x[d + i];
      (sign > 0.0 ? lo : hi) = wi;
    }
    if (hi - lo > kVertexGap) return false;
  }
  return true;
}

}  // namespace

MarginSolution l1_max_margin(const Dataset& data) {
  const Eigen::MatrixXd& z = data.effective();
  const Eigen::Index d = z.rows();
  const detail::LpResult r = detail::solve_lp(l1_program(z));
  switch (r.status) {
    case detail::LpStatus::optimal:
      break;
    case detail::LpStatus::infeasible:
      throw NonSeparableError();
    case detail::LpStatus::unbounded:
      throw SolverError("l1 max-margin program reported unbounded");
    case detail::LpStatus::iteration_limit:
      throw SolverError("l1 simplex hit its pivot limit");
  }

  MarginSolution sol;
  sol.objective_kind = MarginObjective::l1();
  sol.w = r.x.head(d) - r.x.segment(d, d);
  sol.objective = sol.w.lpNorm<1>();
  sol.nu = r.duals.cwiseMax(0.0);
  sol.iterations = r.pivots;
  sol.unique_hint = optimal_face_is_point(z, sol.objective) ? Uniqueness::unique : Uniqueness::degenerate;
  sol.kkt = kkt_check(sol, data, sol.objective_kind);
  return sol;
}

}  // namespace diagnet

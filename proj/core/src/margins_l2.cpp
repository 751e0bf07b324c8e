#include <algorithm>
#include <cmath>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"
#include "margins_detail.hpp"
#include "simplex.hpp"

namespace diagnet {

namespace detail {

namespace {

constexpr int kMaxSweeps = 2'000'000;
constexpr double kDualTol = 1e-12;

// Re-solves the equality system on the support found by coordinate ascent.
// Accepted only if it stays dual and primal feasible.
bool polish(const Eigen::MatrixXd& z, L2Result& r) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index n = 0; n < r.nu.size(); ++n) {
    if (r.nu[n] > 0.0) active.push_back(n);
  }
  if (active.empty()) return false;
  Eigen::MatrixXd za(z.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) za.col(static_cast<Eigen::Index>(k)) = z.col(active[k]);
  const Eigen::MatrixXd gram = za.transpose() * za;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(za.cols());
  const Eigen::VectorXd nu_a = gram.completeOrthogonalDecomposition().solve(ones);
  if (nu_a.minCoeff() < -1e-14) return false;

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(r.nu.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    nu[active[k]] = std::max(0.0, nu_a[static_cast<Eigen::Index>(k)]);
  }
  const Eigen::VectorXd w = z * nu;
  if ((z.transpose() * w).minCoeff() < 1.0 - 1e-12) return false;
  r.w = w;
  r.nu = nu;
  return true;
}

}  // namespace

L2Result l2_on_columns(const Eigen::MatrixXd& z) {
  const Eigen::Index n = z.cols();
  L2Result r;
  r.nu = Eigen::VectorXd::Zero(n);
  r.w = Eigen::VectorXd::Zero(z.rows());
  const Eigen::VectorXd sq = z.colwise().squaredNorm().transpose();

  bool settled = false;
  for (r.sweeps = 1; r.sweeps <= kMaxSweeps; ++r.sweeps) {
    double largest = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (sq[k] == 0.0) continue;
      const double next = std::max(0.0, r.nu[k] + (1.0 - z.col(k).dot(r.w)) / sq[k]);
      const double delta = next - r.nu[k];
      if (delta != 0.0) {
        r.w += delta * z.col(k);
        r.nu[k] = next;
      }
      largest = std::max(largest, std::abs(delta));
    }
    if (largest < kDualTol) {
      settled = true;
      break;
    }
  }
  polish(z, r);
  // Recompute w from the duals so stationarity holds to rounding.
  r.w = z * r.nu;
  if (!settled && (z.transpose() * r.w).minCoeff() < 1.0 - 1e-8) {
    throw SolverError("l2 dual coordinate ascent did not converge");
  }
  return r;
}

}  // namespace detail

bool is_separable(const Dataset& data) {
  const Eigen::MatrixXd& z = data.effective();
  const Eigen::Index d = z.rows();
  const Eigen::Index n = z.cols();
  // Z^T (w+ - w-) - s = 1 with w+, w-, s >= 0.
  detail::StandardFormLp lp;
  lp.A.setZero(n, 2 * d + n);
  lp.A.leftCols(d) = z.transpose();
  lp.A.middleCols(d, d) = -z.transpose();
  lp.A.rightCols(n) = -Eigen::MatrixXd::Identity(n, n);
  lp.b = Eigen::VectorXd::Ones(n);
  lp.c = Eigen::VectorXd::Zero(2 * d + n);
  return detail::solve_lp(lp).status == detail::LpStatus::optimal;
}

MarginSolution l2_max_margin(const Dataset& data) {
  if (!is_separable(data)) throw NonSeparableError();
  const detail::L2Result r = detail::l2_on_columns(data.effective());
  MarginSolution sol;
  sol.objective_kind = MarginObjective::l2();
  sol.w = r.w;
  sol.nu = r.nu;
  sol.objective = r.w.norm();
  sol.unique_hint = Uniqueness::unique;
  sol.iterations = r.sweeps;
  sol.kkt = kkt_check(sol, data, sol.objective_kind);
  return sol;
}

}  // namespace diagnet

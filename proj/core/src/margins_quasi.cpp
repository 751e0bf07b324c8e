#include <cmath>
#include <string>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"
#include "margins_detail.hpp"

namespace diagnet {

double quasi_norm_value(const Eigen::VectorXd& w, int depth, double delta) {
  const double p = 1.0 / static_cast<double>(depth);
  return (w.array().square() + delta * delta).pow(p).sum();
}

Eigen::VectorXd quasi_norm_gradient(const Eigen::VectorXd& w, int depth, double delta) {
  const double p = 1.0 / static_cast<double>(depth);
  return (2.0 * p * w.array() * (w.array().square() + delta * delta).pow(p - 1.0)).matrix();
}

// Majorize-minimize: (a + delta^2)^{1/D} is concave in a = w_i^2, so its
// tangent line at the current iterate is an upper bound. Each iteration solves
// the weighted problem min sum c_i w_i^2 s.t. z_n.w >= 1 exactly, which never
// increases the smoothed objective.
MarginSolution lp_quasi_stationary(const Dataset& data, int depth, const Eigen::VectorXd& w0,
                                   const QuasiNormOptions& options) {
  if (depth <= 2) throw DomainError("lp_quasi_stationary requires depth > 2");
  const Eigen::MatrixXd& z = data.effective();
  if (w0.size() != z.rows() || !w0.allFinite()) throw DomainError("w0 has the wrong size or is not finite");
  if (!is_separable(data)) throw NonSeparableError();

  const double p = 1.0 / static_cast<double>(depth);
  const double d2 = kQuasiNormDelta * kQuasiNormDelta;
  const MarginObjective objective = MarginObjective::quasi_norm(depth);

  Eigen::VectorXd w = w0;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(z.cols());
  KktResiduals kkt;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::ArrayXd weight = p * (w.array().square() + d2).pow(p - 1.0);
    const Eigen::ArrayXd root = weight.sqrt();
    // v = sqrt(c) w turns the weighted problem into a plain l2 margin problem.
    const Eigen::MatrixXd scaled = (root.inverse().matrix().asDiagonal() * z).eval();
    const detail::L2Result sub = detail::l2_on_columns(scaled);
    const Eigen::VectorXd next = (sub.w.array() / root).matrix();
    // Sub-problem stationarity 2 c w = Z nu' matches grad of the smoothed objective.
    nu = 2.0 * sub.nu;
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = next;
    kkt = kkt_check(w, nu, data, objective);
    if (kkt.max() <= 1e-3 * options.stationarity_tol ||
        change <= 1e-15 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
      ++iter;
      break;
    }
  }

  if (kkt.max() > options.stationarity_tol) {
    throw SolverError("l_{2/D} stationary search stopped with residual " + std::to_string(kkt.max()));
  }
  MarginSolution sol;
  sol.objective_kind = objective;
  sol.w = w;
  sol.nu = nu;
  sol.objective = quasi_norm_value(w, depth);
  sol.kkt = kkt;
  sol.unique_hint = Uniqueness::unknown;
  sol.local_only = true;
  sol.iterations = iter;
  return sol;
}

}  // namespace diagnet

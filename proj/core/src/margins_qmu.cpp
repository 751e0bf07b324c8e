#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"

namespace diagnet {

namespace {

constexpr double kFractionToBoundary = 0.99;
// Centering stops at half the squared Newton decrement below kCenteringTol; the
// active-set polish supplies the final digits. Larger leftovers are failures.
constexpr double kCenteringTol = 1e-9;
constexpr double kCenteringFailure = 1e-3;

struct Barrier {
  const Eigen::MatrixXd& z;
  PenaltySpec spec;
  double sigma;  // objective scale so that ||sigma grad Q||_inf = 1 at the start point
  double t;

  Eigen::VectorXd slack(const Eigen::VectorXd& w) const {
    return (z.transpose() * w).array() - 1.0;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& s) const {
    return t * sigma * penalty_gradient(w, spec) - z * s.cwiseInverse();
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::VectorXd& s) const {
    Eigen::MatrixXd hess = (t * sigma * penalty_hessian_diag(w, spec)).asDiagonal();
    const Eigen::MatrixXd zs = z * s.cwiseInverse().asDiagonal();
    hess.noalias() += zs * zs.transpose();
    return hess;
  }
};

// Largest step along dw that keeps every slack positive, damped.
double max_feasible_step(const Eigen::MatrixXd& z, const Eigen::VectorXd& s, const Eigen::VectorXd& dw) {
  const Eigen::VectorXd ds = z.transpose() * dw;
  double step = 1.0;
  for (Eigen::Index n = 0; n < s.size(); ++n) {
    if (ds[n] < 0.0) step = std::min(step, -kFractionToBoundary * s[n] / ds[n]);
  }
  return step;
}

// The barrier is convex along the Newton ray, so its directional derivative is
// increasing; a step with non-positive derivative never increases the barrier.
// Uses derivatives only, which avoids comparing quadrature-valued objectives.
double line_search(const Barrier& b, const Eigen::VectorXd& w, const Eigen::VectorXd& dw) {
  const auto slope = [&](double a) {
    const Eigen::VectorXd trial = w + a * dw;
    return b.gradient(trial, b.slack(trial)).dot(dw);
  };
  double hi = max_feasible_step(b.z, b.slack(w), dw);
  if (slope(hi) <= 0.0) return hi;
  double lo = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) <= 0.0) lo = mid; else hi = mid;
  }
  return lo;
}

// Newton on the active-set KKT system grad Q(w) = Z_A nu_A, Z_A^T w = 1,
// started from the barrier solution. Returns false if the result is not a
// valid KKT point (negative multiplier, violated inactive constraint).
bool polish(const Eigen::MatrixXd& z, const PenaltySpec& spec, Eigen::VectorXd& w, Eigen::VectorXd& nu) {
  const Eigen::Index d = z.rows();
  std::vector<Eigen::Index> active;
  const double nu_scale = std::max(nu.maxCoeff(), 1e-300);
  for (Eigen::Index n = 0; n < nu.size(); ++n) {
    if (nu[n] > 1e-6 * nu_scale) active.push_back(n);
  }
  const auto m = static_cast<Eigen::Index>(active.size());
  if (m == 0) return false;
  Eigen::MatrixXd za(d, m);
  Eigen::VectorXd na(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    za.col(k) = z.col(active[static_cast<std::size_t>(k)]);
    na[k] = nu[active[static_cast<std::size_t>(k)]];
  }

  Eigen::VectorXd x = w;
  Eigen::VectorXd y = na;
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::VectorXd g = penalty_gradient(x, spec);
    Eigen::VectorXd res(d + m);
    res.head(d) = g - za * y;
    res.tail(m) = za.transpose() * x - Eigen::VectorXd::Ones(m);
    const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
    if (res.head(d).cwiseAbs().maxCoeff() <= 1e-13 * scale && res.tail(m).cwiseAbs().maxCoeff() <= 1e-14) break;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + m, d + m);
    jac.topLeftCorner(d, d) = penalty_hessian_diag(x, spec).asDiagonal();
    jac.topRightCorner(d, m) = -za;
    jac.bottomLeftCorner(m, d) = za.transpose();
    const Eigen::VectorXd step = jac.fullPivLu().solve(-res);
    if (!step.allFinite()) return false;
    x += step.head(d);
    y += step.tail(m);
  }
  if (y.minCoeff() < 0.0) return false;
  if ((z.transpose() * x).minCoeff() < 1.0 - 1e-12) return false;

  Eigen::VectorXd full = Eigen::VectorXd::Zero(nu.size());
  for (Eigen::Index k = 0; k < m; ++k) full[active[static_cast<std::size_t>(k)]] = y[k];
  w = x;
  nu = full;
  return true;
}

std::string describe(const Eigen::VectorXd& w) {
  std::ostringstream out;
  out.precision(17);
  out << "[";
  for (Eigen::Index i = 0; i < w.size(); ++i) out << (i ? ", " : "") << w[i];
  out << "]";
  return out.str();
}

}  // namespace

MarginSolution q_mu_max_margin(const Dataset& data, const PenaltySpec& spec,
                               const std::optional<Eigen::VectorXd>& warm_start,
                               const BarrierOptions& options) {
  spec.validate();
  const Eigen::MatrixXd& z = data.effective();
  const auto n_samples = static_cast<double>(z.cols());

  Eigen::VectorXd w;
  if (warm_start && warm_start->size() == z.rows() && warm_start->allFinite() &&
      (z.transpose() * *warm_start).minCoeff() > 0.0) {
    w = *warm_start;
  } else {
    w = l2_max_margin(data).w;  // throws NonSeparableError
  }
  w *= 1.1 / (z.transpose() * w).minCoeff();

  const double grad_scale = penalty_gradient(w, spec).cwiseAbs().maxCoeff();
  Barrier barrier{z, spec, grad_scale > 0.0 ? 1.0 / grad_scale : 1.0, options.t0};

  int newton_total = 0;
  while (true) {
    double decrement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.max_newton; ++it) {
      const Eigen::VectorXd s = barrier.slack(w);
      const Eigen::VectorXd g = barrier.gradient(w, s);
      const Eigen::VectorXd dw = barrier.hessian(w, s).ldlt().solve(-g);
      if (!dw.allFinite()) {
        throw SolverError("q_mu barrier Newton produced a non-finite step; last iterate " + describe(w));
      }
      decrement = -g.dot(dw);
      if (0.5 * decrement <= kCenteringTol) break;
      const double a = line_search(barrier, w, dw);
      ++newton_total;
      if (a == 0.0) break;  // no representable progress along the Newton ray
      w += a * dw;
    }
    if (0.5 * decrement > kCenteringFailure) {
      throw SolverError("q_mu barrier Newton did not converge at t=" + std::to_string(barrier.t) +
                        "; last iterate " + describe(w));
    }
    if (n_samples / barrier.t < options.gap_tol) break;
    barrier.t *= options.t_factor;
  }

  const Eigen::VectorXd s = barrier.slack(w);
  Eigen::VectorXd nu = (barrier.t * barrier.sigma * s.array()).inverse().matrix();

  const MarginObjective objective = MarginObjective::q_mu(spec);
  const KktResiduals before = kkt_check(w, nu, data, objective);
  Eigen::VectorXd w_polished = w;
  Eigen::VectorXd nu_polished = nu;
  if (polish(z, spec, w_polished, nu_polished)) {
    const KktResiduals after = kkt_check(w_polished, nu_polished, data, objective);
    if (after.max() <= before.max()) {
      w = w_polished;
      nu = nu_polished;
    }
  }

  MarginSolution sol;
  sol.objective_kind = objective;
  sol.w = w;
  sol.nu = nu;
  sol.objective = penalty_value(w, spec);
  sol.unique_hint = Uniqueness::unique;
  sol.iterations = newton_total;
  sol.kkt = kkt_check(sol, data, objective);
  if (sol.kkt.max() > options.kkt_tol) {
    throw SolverError("q_mu KKT residual " + std::to_string(sol.kkt.max()) + " above tolerance; last iterate " +
                      describe(w));
  }
  return sol;
}

std::vector<MarginSolution> q_path(const Dataset& data, int depth, std::span<const double> mu_grid) {
  for (std::size_t i = 1; i < mu_grid.size(); ++i) {
    if (!(mu_grid[i] < mu_grid[i - 1])) throw DomainError("q_path grid must be strictly descending");
  }
  std::vector<MarginSolution> path;
  path.reserve(mu_grid.size());
  std::optional<Eigen::VectorXd> warm;
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    try {
      path.push_back(q_mu_max_margin(data, PenaltySpec{depth, mu_grid[i]}, warm));
    } catch (const NonSeparableError&) {
      throw;
    } catch (const Error& e) {
      throw SolverError("q_path grid index " + std::to_string(i) + " (mu=" + std::to_string(mu_grid[i]) +
                        "): " + e.what());
    }
    warm = path.back().w;
  }
  return path;
}

}  // namespace diagnet

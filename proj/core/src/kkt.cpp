#include <cmath>
#include <limits>
#include <string>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"

namespace diagnet {

std::string MarginObjective::name() const {
  switch (kind) {
    case Kind::l2:
      return "l2";
    case Kind::l1:
      return "l1";
    case Kind::q_mu:
      return "qmu";
    case Kind::quasi_norm:
      return "lqd";
  }
  return "unknown";
}

namespace {

double relative(double residual, const Eigen::VectorXd& grad) {
  const double scale = grad.cwiseAbs().maxCoeff();
  return residual / std::max(scale, std::numeric_limits<double>::min());
}

// Distance of g from the subdifferential of ||.||_1 at w, coordinatewise sup.
double l1_subgradient_gap(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
  const double zero_tol = 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff());
  double gap = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) <= zero_tol) {
      gap = std::max(gap, std::abs(g[i]) - 1.0);
    } else {
      gap = std::max(gap, std::abs(g[i] - (w[i] > 0.0 ? 1.0 : -1.0)));
    }
  }
  return std::max(gap, 0.0);
}

}  // namespace

KktResiduals kkt_check(const Eigen::VectorXd& w, const Eigen::VectorXd& nu, const Dataset& data,
                       const MarginObjective& objective) {
  const Eigen::MatrixXd& z = data.effective();
  if (w.size() != z.rows() || nu.size() != z.cols()) throw DomainError("kkt_check: shape mismatch");
  const Eigen::VectorXd margins = z.transpose() * w;
  const Eigen::VectorXd combo = z * nu;

  KktResiduals r;
  switch (objective.kind) {
    case MarginObjective::Kind::l2:
      r.stationarity = (w - combo).cwiseAbs().maxCoeff();
      break;
    case MarginObjective::Kind::l1:
      r.stationarity = l1_subgradient_gap(w, combo);
      break;
    case MarginObjective::Kind::q_mu: {
      const Eigen::VectorXd grad = penalty_gradient(w, objective.penalty);
      r.stationarity = relative((grad - combo).cwiseAbs().maxCoeff(), grad);
      break;
    }
    case MarginObjective::Kind::quasi_norm: {
      const Eigen::VectorXd grad = quasi_norm_gradient(w, objective.penalty.depth);
      r.stationarity = relative((grad - combo).cwiseAbs().maxCoeff(), grad);
      break;
    }
  }
  // A negative multiplier is a stationarity failure as well.
  if (nu.size() > 0) r.stationarity = std::max(r.stationarity, -nu.minCoeff());
  r.primal = std::max(0.0, 1.0 - margins.minCoeff());
  const double weight = std::max(1.0, nu.cwiseAbs().sum());
  r.complementarity = (nu.cwiseAbs().array() * (margins.array() - 1.0).abs()).maxCoeff() / weight;
  return r;
}

KktResiduals kkt_check(const MarginSolution& solution, const Dataset& data, const MarginObjective& objective) {
  return kkt_check(solution.w, solution.nu, data, objective);
}

}  // namespace diagnet

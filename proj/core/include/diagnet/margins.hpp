#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diagnet/data.hpp"
#include "diagnet/penalty.hpp"

namespace diagnet {

enum class Uniqueness { unique, degenerate, unknown };

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;

  double max() const { return std::max({stationarity, primal, complementarity}); }
};

/// Which max-margin problem a solution claims to solve.
struct MarginObjective {
  enum class Kind { l2, l1, q_mu, quasi_norm };
  Kind kind = Kind::l2;
  PenaltySpec penalty{};  // used by q_mu (depth, mu) and quasi_norm (depth)

  static MarginObjective l2() { return {Kind::l2, {}}; }
  static MarginObjective l1() { return {Kind::l1, {}}; }
  static MarginObjective q_mu(PenaltySpec spec) { return {Kind::q_mu, spec}; }
  static MarginObjective quasi_norm(int depth) { return {Kind::quasi_norm, {depth, 1.0}}; }

  std::string name() const;
};

/// A primal max-margin vector with its dual certificate.
struct MarginSolution {
  MarginObjective objective_kind;
  Eigen::VectorXd w;
  double objective = 0.0;
  Eigen::VectorXd nu;  // one nonnegative multiplier per sample
  KktResiduals kkt;
  Uniqueness unique_hint = Uniqueness::unknown;
  /// True when only a local (first-order) certificate is available.
  bool local_only = false;
  int iterations = 0;
};

/// Smoothing constant for the l_{2/D} quasi-norm: |w_i| -> sqrt(w_i^2 + delta^2).
inline constexpr double kQuasiNormDelta = 1e-8;

/// Strict separability test (phase one of the l1 linear program).
bool is_separable(const Dataset& data);

/// argmin ||w||_2 s.t. z_n.w >= 1, by Gauss-Seidel ascent on the dual QP.
/// Converged when the largest dual update in a sweep is below 1e-12.
MarginSolution l2_max_margin(const Dataset& data);

/// argmin ||w||_1 s.t. z_n.w >= 1. Exact vertex optimum from a dense two-phase
/// simplex; reports Uniqueness::degenerate when another vertex within 1e-9 of
/// the optimal objective gives a different w.
MarginSolution l1_max_margin(const Dataset& data);

struct BarrierOptions {
  double t0 = 1.0;
  double t_factor = 10.0;
  double gap_tol = 1e-9;     // stop once N / t < gap_tol
  int max_newton = 200;      // per centering step
  double kkt_tol = 1e-6;
};

/// argmin Q^D_mu(w) s.t. z_n.w >= 1 by a log-barrier interior point method with
/// Newton centering. The warm start is rescaled into the strict interior.
MarginSolution q_mu_max_margin(const Dataset& data, const PenaltySpec& spec,
                               const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                               const BarrierOptions& options = {});

/// Warm-started q_mu solves along a descending grid of mu values.
std::vector<MarginSolution> q_path(const Dataset& data, int depth, std::span<const double> mu_grid);

struct QuasiNormOptions {
  int max_iterations = 5000;
  double stationarity_tol = 1e-4;
};

/// A LOCAL first-order stationary point of min sum_i (w_i^2 + delta^2)^{1/D}
/// s.t. z_n.w >= 1, reached from w0 by majorize-minimize reweighted l2 solves.
MarginSolution lp_quasi_stationary(const Dataset& data, int depth, const Eigen::VectorXd& w0,
                                   const QuasiNormOptions& options = {});

/// Recomputes KKT residuals of (w, nu) for the given objective, independently
/// of the solver that produced them.
///
/// - stationarity: l2 uses ||w - X nu||_inf; l1 measures the distance of X nu
///   from the subdifferential of ||.||_1 at w; q_mu and quasi_norm use
///   ||grad - X nu||_inf / max(||grad||_inf, tiny).
/// - primal: max(0, 1 - min_n z_n.w).
/// - complementarity: max_n nu_n |z_n.w - 1| / max(1, sum nu).
KktResiduals kkt_check(const Eigen::VectorXd& w, const Eigen::VectorXd& nu, const Dataset& data,
                       const MarginObjective& objective);
KktResiduals kkt_check(const MarginSolution& solution, const Dataset& data,
                       const MarginObjective& objective);

/// Smoothed l_{2/D} objective sum_i (w_i^2 + delta^2)^{1/D} and its gradient.
double quasi_norm_value(const Eigen::VectorXd& w, int depth, double delta = kQuasiNormDelta);
Eigen::VectorXd quasi_norm_gradient(const Eigen::VectorXd& w, int depth,
                                    double delta = kQuasiNormDelta);

}  // namespace diagnet

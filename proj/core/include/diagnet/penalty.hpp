#pragma once

#include <Eigen/Dense>

namespace diagnet {

/// Depth and scale of the Q^D_mu penalty family.
struct PenaltySpec {
  int depth = 2;
  double mu = 1.0;

  /// Throws DomainError unless depth >= 2 and mu > 0.
  void validate() const;
};

// The odd, increasing function h_D(z) = (1-z)^{-D/(D-2)} - (1+z)^{-D/(D-2)}
// on (-1, 1), defined for D > 2. Inputs with |z| > 1 - 1e-12 are rejected.
double h(double z, int depth);
double h_prime(double z, int depth);

/// Inverse of h for any finite s, result in (-1, 1). Bisection bracket with
/// Newton polishing; |h(z) - s| <= 1e-12 max(1, |s|) unless the bracket
/// collapses to adjacent doubles first.
double h_inverse(double s, int depth);

/// Scalar penalty q^D: closed form for D = 2, adaptive Simpson quadrature of
/// h^{-1} on [0, z] for D > 2 (absolute tolerance 1e-10).
double q(double z, int depth);
/// q'(z): asinh(z/2) for D = 2, h^{-1}(z) for D > 2.
double q_prime(double z, int depth);
/// q''(z), always positive.
double q_second(double z, int depth);

/// Q^D_mu(w) = sum_i q(w_i / mu).
double penalty_value(const Eigen::VectorXd& w, const PenaltySpec& spec);
/// Gradient (1/mu) q'(w_i / mu).
Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& w, const PenaltySpec& spec);
/// Diagonal of the Hessian, (1/mu^2) q''(w_i / mu).
Eigen::VectorXd penalty_hessian_diag(const Eigen::VectorXd& w, const PenaltySpec& spec);

}  // namespace diagnet

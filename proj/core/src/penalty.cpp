#include "diagnet/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diagnet/error.hpp"

namespace diagnet {

namespace {

constexpr double kEdge = 1.0 - 1e-12;

void require_deep(int depth) {
  if (depth <= 2) throw DomainError("h_D requires depth > 2, got " + std::to_string(depth));
}

double exponent(int depth) { return static_cast<double>(depth) / static_cast<double>(depth - 2); }

// h on [0, 1) without the domain guard; used by the root finder.
double h_raw(double z, double k) { return std::pow(1.0 - z, -k) - std::pow(1.0 + z, -k); }
double h_prime_raw(double z, double k) {
  return k * (std::pow(1.0 - z, -k - 1.0) + std::pow(1.0 + z, -k - 1.0));
}

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double fa, double b, double fb, double fm,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, fa, b, fb, fm, simpson(a, fa, b, fb, fm), tol, 50);
}

}  // namespace

void PenaltySpec::validate() const {
  if (depth < 2) throw DomainError("penalty depth must be >= 2");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("penalty mu must be positive and finite");
}

double h(double z, int depth) {
  require_deep(depth);
  if (!(std::abs(z) <= kEdge)) throw DomainError("h_D argument outside (-1, 1): " + std::to_string(z));
  return h_raw(z, exponent(depth));
}

double h_prime(double z, int depth) {
  require_deep(depth);
  if (!(std::abs(z) <= kEdge)) throw DomainError("h_D argument outside (-1, 1): " + std::to_string(z));
  return h_prime_raw(z, exponent(depth));
}

double h_inverse(double s, int depth) {
  require_deep(depth);
  if (!std::isfinite(s)) throw DomainError("h_D inverse of a non-finite value");
  if (s == 0.0) return 0.0;
  const double k = exponent(depth);
  const double target = std::abs(s);
  const double tol = 1e-12 * std::max(1.0, target);

  // Small-argument slope is 2D/(D-2) = 2k; large arguments behave like (1-z)^{-k}.
  double z = std::min(target / (2.0 * k), 1.0 - std::pow(target, -1.0 / k));
  z = std::clamp(z, 0.0, std::nextafter(1.0, 0.0));
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 400; ++iter) {
    const double f = h_raw(z, k) - target;
    if (std::abs(f) <= tol) break;
    if (f < 0.0) lo = z; else hi = z;
    if (std::nextafter(lo, 1.0) >= hi) {
      z = (std::abs(h_raw(lo, k) - target) <= std::abs(h_raw(hi, k) - target) || hi >= 1.0) ? lo : hi;
      break;
    }
    double next = z - f / h_prime_raw(z, k);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    z = next;
  }
  return s < 0.0 ? -z : z;
}

double q(double z, int depth) {
  if (depth < 2) throw DomainError("q_D requires depth >= 2");
  if (!std::isfinite(z)) throw DomainError("q_D of a non-finite value");
  if (depth == 2) {
    return 2.0 - std::sqrt(4.0 + z * z) + z * std::asinh(0.5 * z);
  }
  const double a = std::abs(z);
  if (a == 0.0) return 0.0;
  const auto integrand = [depth](double s) { return h_inverse(s, depth); };
  // Dyadic panels keep the quadrature well behaved over long ranges where the
  // integrand saturates at 1.
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(a, 1.0);
  while (lo < a) {
    total += integrate(integrand, lo, hi, 1e-10 / 64.0);
    lo = hi;
    hi = std::min(a, 2.0 * hi);
  }
  return total;
}

double q_prime(double z, int depth) {
  if (depth < 2) throw DomainError("q_D requires depth >= 2");
  if (depth == 2) return std::asinh(0.5 * z);
  return h_inverse(z, depth);
}

double q_second(double z, int depth) {
  if (depth < 2) throw DomainError("q_D requires depth >= 2");
  if (depth == 2) return 1.0 / std::sqrt(4.0 + z * z);
  const double k = exponent(depth);
  return 1.0 / h_prime_raw(std::abs(h_inverse(z, depth)), k);
}

double penalty_value(const Eigen::VectorXd& w, const PenaltySpec& spec) {
  spec.validate();
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) total += q(w[i] / spec.mu, spec.depth);
  return total;
}

Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& w, const PenaltySpec& spec) {
  spec.validate();
  Eigen::VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) g[i] = q_prime(w[i] / spec.mu, spec.depth) / spec.mu;
  return g;
}

Eigen::VectorXd penalty_hessian_diag(const Eigen::VectorXd& w, const PenaltySpec& spec) {
  spec.validate();
  Eigen::VectorXd hd(w.size());
  const double inv_mu2 = 1.0 / (spec.mu * spec.mu);
  for (Eigen::Index i = 0; i < w.size(); ++i) hd[i] = q_second(w[i] / spec.mu, spec.depth) * inv_mu2;
  return hd;
}

}  // namespace diagnet

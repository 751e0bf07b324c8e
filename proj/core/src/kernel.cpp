#include <cmath>

#include "diagnet/dynamics.hpp"

namespace diagnet {

Matrix tangent_kernel(const Vector& u_plus, const Vector& u_minus, int depth, const Dataset& data) {
  if (static_cast<std::size_t>(u_plus.size()) != data.dim() || u_minus.size() != u_plus.size()) {
    throw DomainError("tangent_kernel: parameter dimension mismatch");
  }
  const double e = 2.0 * depth - 2.0;
  const Vector c = static_cast<double>(depth * depth) * (u_plus.array().pow(e) + u_minus.array().pow(e)).matrix();
  const Matrix& x = data.points();  // N x d
  return x * c.asDiagonal() * x.transpose();
}

Matrix tangent_kernel(const NetParams& params, const Dataset& data) {
  return tangent_kernel(params.u_plus, params.u_minus, params.depth, data);
}

double kernel_distance(const Matrix& k_t, const Matrix& k_0) {
  if (k_t.rows() != k_0.rows() || k_t.cols() != k_0.cols()) throw DomainError("kernel shapes differ");
  const double nt = k_t.norm();
  const double n0 = k_0.norm();
  if (nt == 0.0 || n0 == 0.0) throw DomainError("kernel_distance of a zero kernel");
  return 1.0 - (k_t.cwiseProduct(k_0).sum() / nt) / n0;
}

Vector linearized_flow_step(const Vector& w_bar, const Dataset& data, double alpha, int depth, double eta,
                            StepMode mode) {
  const MarginState ms = margin_state(w_bar, data);
  const double gain = 2.0 * depth * depth * std::pow(alpha, 2.0 * depth - 2.0);
  Vector weights;
  if (mode == StepMode::normalized) {
    weights = ms.p;
  } else {
    // Scalar exp: the vectorized one clamps instead of underflowing to zero.
    weights = ms.margins.unaryExpr([](double m) { return std::exp(-m); }) / static_cast<double>(data.num_samples());
  }
  return w_bar + eta * gain * (data.effective() * weights);
}

std::vector<LinearizedRecord> run_linearized(const Dataset& data, double alpha, int depth, double eta,
                                             double gamma_tilde_target, std::int64_t max_steps,
                                             std::int64_t record_every) {
  if (record_every < 1) throw DomainError("record_every must be >= 1");
  std::vector<LinearizedRecord> out;
  Vector w = Vector::Zero(static_cast<Eigen::Index>(data.dim()));
  MarginState ms = margin_state(w, data);
  out.push_back({0, ms.gamma, ms.gamma_tilde, w});
  for (std::int64_t k = 1; k <= max_steps && ms.gamma_tilde < gamma_tilde_target; ++k) {
    w = linearized_flow_step(w, data, alpha, depth, eta, StepMode::normalized);
    ms = margin_state(w, data);
    if (k % record_every == 0 || ms.gamma_tilde >= gamma_tilde_target) out.push_back({k, ms.gamma, ms.gamma_tilde, w});
  }
  return out;
}

}  // namespace diagnet

#include "diagnet/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace diagnet {

void StoppingRule::validate() const {
  if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("stopping rule value must be positive");
}

std::string StoppingRule::label() const {
  std::ostringstream out;
  out.precision(17);
  out << (kind == Kind::mu_scaled ? "mu=" : "gt=") << value;
  return out.str();
}

double schedule_target(double alpha, int depth, const StoppingRule& rule) {
  rule.validate();
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (rule.kind == StoppingRule::Kind::fixed_gamma_tilde) return rule.value;
  return std::pow(alpha, depth) / rule.value;
}

Vector rescale_to_margin(const Vector& w, const Dataset& data) {
  const double gamma = (data.effective().transpose() * w).minCoeff();
  if (!(gamma > 0.0)) throw DomainError("predictor does not separate the data; cannot rescale to unit margin");
  return w / gamma;
}

ExcessNorms excess_norms(const Vector& w_hat, const Vector& w_l1, const Vector& w_l2) {
  const double n1 = w_l1.lpNorm<1>();
  const double n2 = w_l2.norm();
  if (n1 == 0.0 || n2 == 0.0) throw DomainError("reference solution has zero norm");
  return {w_hat.lpNorm<1>() / n1 - 1.0, w_hat.norm() / n2 - 1.0};
}

ExcessNorms excess_norms(const Vector& w, const Dataset& data, const Vector& w_l1, const Vector& w_l2) {
  return excess_norms(rescale_to_margin(w, data), w_l1, w_l2);
}

SphereCoords sphere_coords(const Vector& w) {
  if (w.size() != 3) throw DomainError("sphere_coords needs a 3-vector");
  const double norm = w.norm();
  if (norm == 0.0) throw DomainError("sphere_coords of the zero vector");
  SphereCoords c;
  c.pitch = std::asin(std::clamp(w[2] / norm, -1.0, 1.0));
  c.azimuth = (w[0] == 0.0 && w[1] == 0.0) ? 0.0 : std::atan2(w[1], w[0]);
  return c;
}

double angle_degrees(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DomainError("angle with a zero vector");
  const double cosine = std::clamp(a.dot(b) / na / nb, -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

std::vector<std::size_t> support_vectors(const Vector& margins, double gamma) {
  std::vector<std::size_t> out;
  const double cut = gamma * (1.0 + 1e-6) + 1e-9;
  for (Eigen::Index n = 0; n < margins.size(); ++n) {
    if (margins[n] <= cut) out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

double default_window_lo(double alpha, int depth) { return std::pow(alpha, 0.5 * depth); }

ConditionReport condition1_check(const std::vector<TrajectoryRecord>& trajectory, const Dataset& data,
                                 const Vector& w_hat, double rho0, double window_lo,
                                 std::optional<double> window_hi) {
  if (!(rho0 > 1.0)) throw DomainError("rho0 must exceed 1");
  if (trajectory.empty()) throw DomainError("empty trajectory");
  ConditionReport rep;
  rep.rho0 = rho0;
  rep.gamma_tilde_star = window_lo;
  rep.window_lo = window_lo;
  rep.window_hi = window_hi.value_or(trajectory.back().gamma_tilde);
  if (rep.window_hi < rep.window_lo) throw DomainError("condition window is empty");

  double seen_lo = trajectory.front().gamma_tilde;
  double seen_hi = seen_lo;
  for (const auto& r : trajectory) {
    seen_lo = std::min(seen_lo, r.gamma_tilde);
    seen_hi = std::max(seen_hi, r.gamma_tilde);
  }
  const double slack = 1e-6 * std::max(1.0, std::abs(rep.window_hi));
  if (seen_lo > rep.window_lo || seen_hi < rep.window_hi - slack) {
    throw DomainError("trajectory does not cover the condition window");
  }

  const Matrix& z = data.effective();
  const Vector hat_margins = z.transpose() * w_hat;
  std::vector<std::size_t> checked;
  for (Eigen::Index k = 0; k < hat_margins.size(); ++k) {
    if (hat_margins[k] > 1.0 + 1e-6) checked.push_back(static_cast<std::size_t>(k));
  }
  for (const std::size_t k : checked) rep.per_nonsupport_sample.push_back({k, std::numeric_limits<double>::infinity()});

  for (const auto& r : trajectory) {
    if (r.gamma_tilde < rep.window_lo || r.gamma_tilde > rep.window_hi + slack) continue;
    ++rep.records_in_window;
    const Vector m = z.transpose() * r.w;
    const double gamma = m.minCoeff();
    for (auto& s : rep.per_nonsupport_sample) {
      // A non-positive gamma means the iterate does not separate yet: ratio undefined, count as failure.
      const double ratio = gamma > 0.0 ? m[static_cast<Eigen::Index>(s.index)] / gamma
                                       : -std::numeric_limits<double>::infinity();
      s.min_ratio = std::min(s.min_ratio, ratio);
    }
  }
  if (rep.records_in_window == 0) throw DomainError("no records inside the condition window");
  rep.holds = std::all_of(rep.per_nonsupport_sample.begin(), rep.per_nonsupport_sample.end(),
                          [rho0](const SampleRatio& s) { return s.min_ratio >= rho0; });
  return rep;
}

std::map<int, LineFit> accuracy_vs_init_fit(const std::vector<FitPoint>& points) {
  std::map<int, std::vector<std::pair<double, double>>> by_depth;
  for (const auto& p : points) {
    if (!(p.alpha > 0.0) || !(p.gamma_tilde > 0.0)) throw DomainError("fit points must be positive");
    by_depth[p.depth].emplace_back(p.depth * std::log(p.alpha), std::log(p.gamma_tilde));
  }
  std::map<int, LineFit> fits;
  for (const auto& [depth, xy] : by_depth) {
    if (xy.size() < 2) throw DomainError("accuracy_vs_init_fit needs two points for depth " + std::to_string(depth));
    const auto n = static_cast<double>(xy.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [x, y] : xy) {
      mx += x / n;
      my += y / n;
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& [x, y] : xy) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) throw DomainError("accuracy_vs_init_fit needs distinct alpha values");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (const auto& [x, y] : xy) {
      const double e = y - (fit.slope * x + fit.intercept);
      ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    fit.points = xy.size();
    fits[depth] = fit;
  }
  return fits;
}

std::optional<double> gamma_tilde_at_crossing(const NetParams& params0, const Dataset& data,
                                              const StepperConfig& cfg,
                                              const std::function<double(const SimState&)>& metric,
                                              double threshold) {
  cfg.validate();
  SimState state = initial_state(params0, data);
  double prev_value = metric(state);
  if (prev_value <= threshold) return state.record.gamma_tilde;
  for (std::int64_t k = 0; k < cfg.max_steps; ++k) {
    if (cfg.gamma_tilde_target && state.record.gamma_tilde >= *cfg.gamma_tilde_target) break;
    SimState next = step(state, data, cfg);
    const double value = metric(next);
    if (value <= threshold) {
      if (std::isnan(prev_value)) return next.record.gamma_tilde;
      const double frac = (prev_value - threshold) / (prev_value - value);
      return state.record.gamma_tilde + frac * (next.record.gamma_tilde - state.record.gamma_tilde);
    }
    prev_value = value;
    state = std::move(next);
  }
  return std::nullopt;
}

double scaled_eta(double eta, double alpha, int depth) {
  return alpha > 1.0 ? eta / std::pow(alpha, 2.0 * depth - 2.0) : eta;
}

}  // namespace diagnet

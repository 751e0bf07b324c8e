#include "diagnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diagnet/margins.hpp"
#include "diagnet/penalty.hpp"

namespace diagnet {

namespace {

Vector power(const Vector& u, int k) { return u.array().pow(static_cast<double>(k)).matrix(); }

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// exp(-x) elementwise. Eigen's vectorized exp clamps very negative arguments
// instead of underflowing to zero.
Vector exp_neg(const Eigen::Ref<const Vector>& x) {
  return x.unaryExpr([](double v) { return std::exp(-v); });
}

// X r for plain mode: r_n = exp(-z_n.w) / N. Throws if every term underflows.
Vector plain_drift(const MarginState& ms, const Dataset& data) {
  const Vector r = exp_neg(ms.margins) / static_cast<double>(data.num_samples());
  if (!(r.maxCoeff() > 0.0)) {
    throw UnderflowError("exp-loss underflowed to zero at gamma_tilde=" + std::to_string(ms.gamma_tilde) +
                         "; use normalized mode");
  }
  return data.effective() * r;
}

Vector drift(const MarginState& ms, const Dataset& data, StepMode mode) {
  return mode == StepMode::normalized ? Vector(data.effective() * ms.p) : plain_drift(ms, data);
}

TrajectoryRecord make_record(const NetParams& params, const MarginState& ms) {
  TrajectoryRecord rec;
  rec.gamma = ms.gamma;
  rec.gamma_tilde = ms.gamma_tilde;
  rec.w = predictor(params);
  rec.u_plus = params.u_plus;
  rec.u_minus = params.u_minus;
  return rec;
}

}  // namespace

NetParams NetParams::init(std::size_t dim, int depth, double alpha) {
  NetParams p;
  p.depth = depth;
  p.alpha = alpha;
  p.u_plus = Vector::Constant(static_cast<Eigen::Index>(dim), alpha);
  p.u_minus = p.u_plus;
  p.validate();
  return p;
}

void NetParams::validate() const {
  if (depth < 2) throw DomainError("depth must be an integer >= 2");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive and finite");
  if (u_plus.size() != u_minus.size() || u_plus.size() == 0) throw DomainError("u_plus/u_minus size mismatch");
  if (!u_plus.allFinite() || !u_minus.allFinite()) throw DomainError("parameters must be finite");
  if (u_plus.minCoeff() < 0.0 || u_minus.minCoeff() < 0.0) throw DomainError("parameters must be nonnegative");
}

Vector predictor(const NetParams& params) {
  return power(params.u_plus, params.depth) - power(params.u_minus, params.depth);
}

MarginState margin_state(const Vector& w, const Dataset& data) {
  if (static_cast<std::size_t>(w.size()) != data.dim()) throw DomainError("predictor dimension mismatch");
  MarginState ms;
  ms.margins = data.effective().transpose() * w;
  ms.gamma = ms.margins.minCoeff();
  const Vector shifted = exp_neg((ms.margins.array() - ms.gamma).matrix());
  const double total = shifted.sum();  // in [1, N]
  // gamma_tilde = gamma + gap with gap in [0, log N]. The sum is rounded toward
  // gamma so that gamma_tilde - gamma never exceeds gap, even when gamma is large
  // enough that its ulp dwarfs the bound's tolerance.
  const double gap = std::log(static_cast<double>(data.num_samples())) - std::log(total);
  ms.gamma_tilde = ms.gamma + gap;
  if (ms.gamma_tilde - ms.gamma > gap) ms.gamma_tilde = std::nextafter(ms.gamma_tilde, ms.gamma);
  ms.p = shifted / total;
  return ms;
}

MarginState margin_state(const NetParams& params, const Dataset& data) {
  return margin_state(predictor(params), data);
}

Vector loss_gradient(const NetParams& params, const Dataset& data) {
  const MarginState ms = margin_state(params, data);
  const Vector v = plain_drift(ms, data);
  const auto d = params.u_plus.size();
  const double dd = static_cast<double>(params.depth);
  Vector g(2 * d);
  g.head(d) = -dd * power(params.u_plus, params.depth - 1).cwiseProduct(v);
  g.tail(d) = dd * power(params.u_minus, params.depth - 1).cwiseProduct(v);
  return g;
}

Vector normalized_direction(const NetParams& params, const Dataset& data) {
  const MarginState ms = margin_state(params, data);
  const Vector v = data.effective() * ms.p;
  const auto d = params.u_plus.size();
  const double dd = static_cast<double>(params.depth);
  Vector g(2 * d);
  g.head(d) = -dd * power(params.u_plus, params.depth - 1).cwiseProduct(v);
  g.tail(d) = dd * power(params.u_minus, params.depth - 1).cwiseProduct(v);
  return g;
}

double closed_form_factor(int depth, double alpha) {
  if (depth == 2) return 4.0;
  return std::pow(alpha, depth - 2) * depth * (depth - 2);
}

void StepperConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive and finite");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw DomainError("step_shrink must lie in (0, 1)");
  if (max_steps < 0) throw DomainError("max_steps must be nonnegative");
  if (record_every < 1) throw DomainError("record_every must be >= 1");
  if (max_retries < 0) throw DomainError("max_retries must be nonnegative");
  if (gamma_tilde_target && !std::isfinite(*gamma_tilde_target)) throw DomainError("target must be finite");
  if (max_relative_update < 0.0) throw DomainError("max_relative_update must be nonnegative");
}

void LogTime::add_log(double log_dt) {
  log_abs = log_add(log_abs, log_dt);
  sign = 1;
}

SimState initial_state(const NetParams& params, const Dataset& data) {
  params.validate();
  if (static_cast<std::size_t>(params.u_plus.size()) != data.dim()) throw DomainError("parameter dimension mismatch");
  SimState st{params, make_record(params, margin_state(params, data))};
  st.record.s_accum = Vector::Zero(params.u_plus.size());
  return st;
}

std::optional<SimState> try_step(const SimState& state, const Dataset& data, StepMode mode, double eta) {
  const NetParams& p = state.params;
  const MarginState ms = margin_state(p, data);
  const Vector v = drift(ms, data, mode);
  const double dd = static_cast<double>(p.depth);

  SimState next{p, {}};
  next.params.u_plus = p.u_plus + eta * dd * power(p.u_plus, p.depth - 1).cwiseProduct(v);
  next.params.u_minus = p.u_minus - eta * dd * power(p.u_minus, p.depth - 1).cwiseProduct(v);
  if (next.params.u_plus.minCoeff() < 0.0 || next.params.u_minus.minCoeff() < 0.0) return std::nullopt;
  if (!next.params.u_plus.allFinite() || !next.params.u_minus.allFinite()) return std::nullopt;

  const MarginState after = margin_state(next.params, data);
  if (!(after.gamma_tilde > ms.gamma_tilde)) return std::nullopt;

  next.record = make_record(next.params, after);
  next.record.step = state.record.step + 1;
  next.record.eta = eta;
  next.record.s_accum = state.record.s_accum + closed_form_factor(p.depth, p.alpha) * eta * v;
  next.record.flow_time = state.record.flow_time;
  // Normalized steps advance real time by eta / L = eta * exp(gamma_tilde).
  next.record.flow_time.add_log(std::log(eta) + (mode == StepMode::normalized ? ms.gamma_tilde : 0.0));
  return next;
}

SimState step(const SimState& state, const Dataset& data, const StepperConfig& cfg) {
  double eta = cfg.eta;
  if (cfg.max_relative_update > 0.0) {
    const NetParams& p = state.params;
    const MarginState ms = margin_state(p, data);
    const Vector v = drift(ms, data, cfg.mode).cwiseAbs();
    const double dd = static_cast<double>(p.depth);
    const double rel = dd * std::max(power(p.u_plus, p.depth - 2).cwiseProduct(v).maxCoeff(),
                                     power(p.u_minus, p.depth - 2).cwiseProduct(v).maxCoeff());
    if (eta * rel > cfg.max_relative_update) eta = cfg.max_relative_update / rel;
  }
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (auto next = try_step(state, data, cfg.mode, eta)) return std::move(*next);
    eta *= cfg.step_shrink;
  }
  throw StepUnderflowError("no acceptable step after " + std::to_string(cfg.max_retries) +
                           " retries at gamma_tilde=" + std::to_string(state.record.gamma_tilde));
}

std::vector<TrajectoryRecord> run(const NetParams& params0, const Dataset& data, const StepperConfig& cfg,
                                  const RecordHook& hook) {
  cfg.validate();
  if (!is_separable(data)) throw NonSeparableError();
  std::vector<TrajectoryRecord> records;
  const auto keep = [&](const SimState& st) {
    records.push_back(st.record);
    if (hook) hook(st, records.back());
  };

  SimState state = initial_state(params0, data);
  keep(state);
  const std::optional<double> target = cfg.gamma_tilde_target;
  if (target && state.record.gamma_tilde >= *target) return records;

  for (std::int64_t k = 1; k <= cfg.max_steps; ++k) {
    SimState next = step(state, data, cfg);
    if (target && next.record.gamma_tilde >= *target) {
      const double tol = 1e-6 * std::max(1.0, std::abs(*target));
      double lo = 0.0;
      double hi = next.record.eta;
      for (int it = 0; it < 200 && next.record.gamma_tilde - *target > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto trial = try_step(state, data, cfg.mode, mid);
        if (!trial || trial->record.gamma_tilde < *target - tol) {
          lo = mid;
          continue;
        }
        hi = mid;
        next = std::move(*trial);
      }
      keep(next);
      return records;
    }
    state = std::move(next);
    if (k % cfg.record_every == 0) keep(state);
  }

  if (records.back().step != state.record.step) keep(state);
  if (target) {
    throw BudgetExhausted("budget of " + std::to_string(cfg.max_steps) + " steps exhausted at gamma_tilde=" +
                              std::to_string(state.record.gamma_tilde) + " before target " +
                              std::to_string(*target),
                          std::move(records));
  }
  return records;
}

double closed_form_residual(const TrajectoryRecord& record, double alpha, int depth) {
  if (record.s_accum.size() != record.w.size()) throw DomainError("record carries no s_accum");
  Vector model(record.w.size());
  if (depth == 2) {
    model = 2.0 * alpha * alpha * record.s_accum.array().sinh();
  } else {
    const double scale = std::pow(alpha, depth);
    for (Eigen::Index i = 0; i < model.size(); ++i) {
      if (!(std::abs(record.s_accum[i]) < 1.0)) {
        throw DomainError("closed-form argument outside (-1, 1); step size too large");
      }
      model[i] = scale * h(record.s_accum[i], depth);
    }
  }
  return (record.w - model).cwiseAbs().maxCoeff();
}

}  // namespace diagnet

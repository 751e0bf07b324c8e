#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "diagnet/error.hpp"

#include "diagnet/regimes.hpp"

namespace diagnet {

namespace {

struct CellKey {
  int depth;
  double alpha;
  StoppingRule rule;
};

}  // namespace

RecordHook metrics_hook(const Dataset& data, const NetParams& params0, const MetricSelection& selection,
                        const Vector& w_l1, const Vector& w_l2) {
  const Matrix k0 = tangent_kernel(params0, data);
  return [&data, selection, k0, w_l1, w_l2, alpha = params0.alpha, depth = params0.depth](
             const SimState& st, TrajectoryRecord& rec) {
    if (selection.kernel_distance) {
      rec.metrics["kernel_distance"] = kernel_distance(tangent_kernel(st.params, data), k0);
    }
    if (selection.closed_form) rec.metrics["closed_form_residual"] = closed_form_residual(rec, alpha, depth);
    if (selection.excess && rec.gamma > 0.0) {
      const ExcessNorms ex = excess_norms(rec.w / rec.gamma, w_l1, w_l2);
      rec.metrics["excess_l1"] = ex.l1;
      rec.metrics["excess_l2"] = ex.l2;
    }
  };
}

SweepCell run_cell(const SweepSpec& spec, int depth, double alpha, const StoppingRule& rule,
                   const MarginSolution& l1, const MarginSolution& l2) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  SweepCell cell;
  cell.depth = depth;
  cell.alpha = alpha;
  cell.rule = rule;
  cell.angle_qmu = nan;
  cell.kernel_distance = nan;
  cell.closed_form_residual = nan;
  try {
    cell.target = schedule_target(alpha, depth, rule);
    cell.eta = spec.scale_eta ? scaled_eta(spec.stepper.eta, alpha, depth) : spec.stepper.eta;
    StepperConfig cfg = spec.stepper;
    cfg.eta = cell.eta;
    cfg.gamma_tilde_target = cell.target;

    const NetParams params0 = NetParams::init(spec.data.dim(), depth, alpha);
    const RecordHook hook = metrics_hook(spec.data, params0, spec.metrics, l1.w, l2.w);
    std::vector<TrajectoryRecord> traj = run(params0, spec.data, cfg, hook);
    const TrajectoryRecord& last = traj.back();
    cell.steps = last.step;
    cell.gamma = last.gamma;
    cell.gamma_tilde = last.gamma_tilde;
    cell.w = last.w;
    if (last.gamma > 0.0) {
      const ExcessNorms ex = excess_norms(last.w / last.gamma, l1.w, l2.w);
      cell.excess_l1 = ex.l1;
      cell.excess_l2 = ex.l2;
    } else {
      cell.excess_l1 = nan;
      cell.excess_l2 = nan;
    }
    if (last.w.norm() > 0.0) {
      cell.angle_l1 = angle_degrees(last.w, l1.w);
      cell.angle_l2 = angle_degrees(last.w, l2.w);
    } else {
      cell.angle_l1 = nan;
      cell.angle_l2 = nan;
    }
    if (spec.metrics.kernel_distance) cell.kernel_distance = last.metrics.at("kernel_distance");
    if (spec.metrics.closed_form) cell.closed_form_residual = last.metrics.at("closed_form_residual");
    if (rule.kind == StoppingRule::Kind::mu_scaled) {
      const MarginSolution qmu = q_mu_max_margin(spec.data, PenaltySpec{depth, rule.value});
      if (last.w.norm() > 0.0) cell.angle_qmu = angle_degrees(last.w, qmu.w);
    }
    // w_hat is the trajectory's own limit direction w(T)/gamma(T). Small targets
    // can end before the window opens; condition_holds then stays empty.
    const double window_lo = default_window_lo(alpha, depth);
    if (spec.condition && rule.kind == StoppingRule::Kind::mu_scaled && last.gamma > 0.0 && window_lo < cell.target) {
      cell.condition_holds = condition1_check(traj, spec.data, last.w / last.gamma, spec.rho0,
                                              window_lo, cell.target)
                                 .holds;
    }
    if (spec.keep_trajectories) cell.trajectory = std::move(traj);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

namespace {

// Runs job(i) for i in [0, n) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t n, std::size_t workers, const Job& job) {
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) job(i);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  SweepResult result;
  result.dataset_name = spec.dataset_name;
  result.l1 = l1_max_margin(spec.data);
  result.l2 = l2_max_margin(spec.data);

  std::vector<CellKey> keys;
  for (const int depth : spec.depths) {
    for (const double alpha : spec.alphas) {
      for (const auto& rule : spec.rules) keys.push_back({depth, alpha, rule});
    }
  }
  result.cells.resize(keys.size());

  parallel_for(keys.size(), spec.workers, [&](std::size_t i) {
    result.cells[i] = run_cell(spec, keys[i].depth, keys[i].alpha, keys[i].rule, result.l1, result.l2);
  });
  return result;
}

std::vector<AccuracyCell> run_accuracy_sweep(const AccuracySweepSpec& spec) {
  if (!(spec.threshold > 0.0)) throw DomainError("excess threshold must be positive");
  const MarginSolution l1 = l1_max_margin(spec.data);
  const MarginSolution l2 = l2_max_margin(spec.data);
  std::vector<AccuracyCell> cells;
  for (const int depth : spec.depths) {
    for (const double apd : spec.alpha_pow_d) {
      AccuracyCell cell;
      cell.depth = depth;
      cell.alpha_pow_d = apd;
      cells.push_back(cell);
    }
  }
  const auto excess = [&](const SimState& st) {
    if (!(st.record.gamma > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return excess_norms(st.record.w / st.record.gamma, l1.w, l2.w).l1;
  };
  parallel_for(cells.size(), spec.workers, [&](std::size_t i) {
    AccuracyCell& cell = cells[i];
    try {
      if (!(cell.alpha_pow_d > 0.0)) throw DomainError("alpha^D must be positive");
      cell.alpha = std::pow(cell.alpha_pow_d, 1.0 / cell.depth);
      StepperConfig cfg = spec.stepper;
      cfg.eta = spec.scale_eta ? scaled_eta(cfg.eta, cell.alpha, cell.depth) : cfg.eta;
      cell.eta = cfg.eta;
      cell.gamma_tilde = gamma_tilde_at_crossing(NetParams::init(spec.data.dim(), cell.depth, cell.alpha), spec.data,
                                                 cfg, excess, spec.threshold);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  return cells;
}

std::vector<FitPoint> fit_points(const std::vector<AccuracyCell>& cells) {
  std::vector<FitPoint> points;
  for (const auto& c : cells) {
    if (c.error.empty() && c.gamma_tilde) points.push_back({c.alpha, c.depth, *c.gamma_tilde});
  }
  return points;
}

}  // namespace diagnet

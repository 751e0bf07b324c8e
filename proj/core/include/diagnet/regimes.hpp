#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diagnet/data.hpp"
#include "diagnet/dynamics.hpp"
#include "diagnet/margins.hpp"

namespace diagnet {

/// When to read out a trajectory: a fixed gamma_tilde, or gamma_tilde = alpha^D / mu.
struct StoppingRule {
  enum class Kind { fixed_gamma_tilde, mu_scaled };
  Kind kind = Kind::fixed_gamma_tilde;
  double value = 1.0;

  static StoppingRule fixed(double gamma_tilde) { return {Kind::fixed_gamma_tilde, gamma_tilde}; }
  static StoppingRule mu_scaled(double mu) { return {Kind::mu_scaled, mu}; }
  void validate() const;
  /// "gt=<value>" or "mu=<value>".
  std::string label() const;
};

double schedule_target(double alpha, int depth, const StoppingRule& rule);

/// w / min_n z_n.w. Throws DomainError unless the margin is positive.
Vector rescale_to_margin(const Vector& w, const Dataset& data);

struct ExcessNorms {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// (||w_hat||_1 / ||w_l1||_1 - 1, ||w_hat||_2 / ||w_l2||_2 - 1) for a margin-1 w_hat.
ExcessNorms excess_norms(const Vector& w_hat, const Vector& w_l1, const Vector& w_l2);
/// Same after rescaling w to unit margin on `data`.
ExcessNorms excess_norms(const Vector& w, const Dataset& data, const Vector& w_l1, const Vector& w_l2);

struct SphereCoords {
  double azimuth = 0.0;  // atan2(w_2, w_1); 0 at the poles
  double pitch = 0.0;    // asin(w_3 / ||w||)
};
SphereCoords sphere_coords(const Vector& w);

/// Angle between directions in degrees, arccos of the clamped cosine.
double angle_degrees(const Vector& a, const Vector& b);

/// Indices n with margins_n <= gamma (1 + 1e-6) + 1e-9.
std::vector<std::size_t> support_vectors(const Vector& margins, double gamma);

struct SampleRatio {
  std::size_t index = 0;
  double min_ratio = 0.0;  // min over the window of z_k.w / gamma
};

struct ConditionReport {
  double rho0 = 1.01;
  double gamma_tilde_star = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t records_in_window = 0;
  std::vector<SampleRatio> per_nonsupport_sample;
  bool holds = true;
};

/// Condition 1 over records with gamma_tilde in [window_lo, window_hi]; the
/// samples checked are those with z_k.w_hat > 1 + 1e-6. window_hi defaults to
/// the final record. Throws DomainError if the records do not reach both ends.
ConditionReport condition1_check(const std::vector<TrajectoryRecord>& trajectory, const Dataset& data,
                                 const Vector& w_hat, double rho0, double window_lo,
                                 std::optional<double> window_hi = std::nullopt);

/// Default window lower end alpha^{D/2}.
double default_window_lo(double alpha, int depth);

struct FitPoint {
  double alpha = 1.0;
  int depth = 2;
  double gamma_tilde = 1.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
  std::size_t points = 0;
};

/// Per-depth least squares of log gamma_tilde on log alpha^D. Throws
/// DomainError when a depth has fewer than two points or a nonpositive value.
std::map<int, LineFit> accuracy_vs_init_fit(const std::vector<FitPoint>& points);

/// Steps a fresh trajectory until metric(state) <= threshold, returning the
/// gamma_tilde at the crossing (linearly interpolated between the two steps
/// that bracket it), or nullopt if cfg.gamma_tilde_target or cfg.max_steps is
/// reached first. The metric is not evaluated while it returns NaN.
std::optional<double> gamma_tilde_at_crossing(const NetParams& params0, const Dataset& data,
                                              const StepperConfig& cfg,
                                              const std::function<double(const SimState&)>& metric,
                                              double threshold);

/// Per-record metrics attached by metrics_hook.
struct MetricSelection {
  bool kernel_distance = true;  // "kernel_distance" against the kernel at params0
  bool closed_form = false;     // "closed_form_residual"
  bool excess = true;           // "excess_l1", "excess_l2" once gamma > 0
};

/// Hook for run() computing the selected metrics. Holds a reference to `data`,
/// which must outlive it.
RecordHook metrics_hook(const Dataset& data, const NetParams& params0, const MetricSelection& selection,
                        const Vector& w_l1, const Vector& w_l2);

/// eta / alpha^{2D-2} for alpha > 1, eta otherwise. Keeps the per-step change of
/// the margins comparable across initialization scales.
double scaled_eta(double eta, double alpha, int depth);

struct SweepSpec {
  std::string dataset_name;
  Dataset data;
  std::vector<int> depths;
  std::vector<double> alphas;
  std::vector<StoppingRule> rules;
  StepperConfig stepper;
  bool scale_eta = true;
  MetricSelection metrics;
  bool condition = false;
  double rho0 = 1.01;
  bool keep_trajectories = false;
  std::size_t workers = 1;
};

struct SweepCell {
  int depth = 2;
  double alpha = 1.0;
  StoppingRule rule;
  double target = 0.0;
  double eta = 0.0;
  std::string error;  // empty on success

  std::int64_t steps = 0;
  double gamma = 0.0;
  double gamma_tilde = 0.0;
  Vector w;
  double excess_l1 = 0.0;
  double excess_l2 = 0.0;
  double angle_l1 = 0.0;
  double angle_l2 = 0.0;
  /// NaN unless the rule is mu_scaled.
  double angle_qmu = 0.0;
  double kernel_distance = 0.0;
  double closed_form_residual = 0.0;
  /// Set only for mu_scaled cells with the condition enabled and a nonempty window.
  std::optional<bool> condition_holds;
  std::vector<TrajectoryRecord> trajectory;

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::string dataset_name;
  MarginSolution l1;
  MarginSolution l2;
  std::vector<SweepCell> cells;  // depth-major, then alpha, then rule
};

/// Runs every (depth, alpha, rule) cell on a pool of spec.workers threads.
/// Output order and values do not depend on the worker count.
SweepResult run_sweep(const SweepSpec& spec);

/// The cell computation used by run_sweep, exposed for single-cell use.
SweepCell run_cell(const SweepSpec& spec, int depth, double alpha, const StoppingRule& rule,
                   const MarginSolution& l1, const MarginSolution& l2);

/// Grid over (depth, alpha^D) recording the gamma_tilde at which the excess l1
/// norm of w / gamma first drops to `threshold`.
struct AccuracySweepSpec {
  Dataset data;
  std::vector<int> depths;
  std::vector<double> alpha_pow_d;  // alpha^D values
  double threshold = 0.05;
  StepperConfig stepper;  // gamma_tilde_target, if set, caps each run
  bool scale_eta = true;
  std::size_t workers = 1;
};

struct AccuracyCell {
  int depth = 2;
  double alpha_pow_d = 1.0;
  double alpha = 1.0;
  double eta = 0.0;
  std::optional<double> gamma_tilde;  // empty if the threshold was not reached
  std::string error;
};

/// Cells in depth-major order; independent of the worker count.
std::vector<AccuracyCell> run_accuracy_sweep(const AccuracySweepSpec& spec);

/// FitPoints from the cells that reached the threshold.
std::vector<FitPoint> fit_points(const std::vector<AccuracyCell>& cells);

}  // namespace diagnet

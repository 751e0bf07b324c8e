#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diagnet/data.hpp"
#include "diagnet/error.hpp"

namespace diagnet {

/// Parameters of a depth-D diagonal network, w = u_plus^D - u_minus^D.
struct NetParams {
  Vector u_plus;
  Vector u_minus;
  int depth = 2;
  double alpha = 1.0;

  /// u_plus = u_minus = alpha * 1, hence w = 0.
  static NetParams init(std::size_t dim, int depth, double alpha);
  /// Throws DomainError on depth < 2, alpha <= 0, size mismatch or negative entries.
  void validate() const;
};

Vector predictor(const NetParams& params);

/// Margins in the log domain. The loss exp(-gamma_tilde) is never formed.
struct MarginState {
  double gamma = 0.0;        // min_n z_n.w
  double gamma_tilde = 0.0;  // -log((1/N) sum_n exp(-z_n.w))
  Vector p;                  // softmax(-(margins - gamma)), sums to 1
  Vector margins;            // z_n.w
};

MarginState margin_state(const Vector& w, const Dataset& data);
MarginState margin_state(const NetParams& params, const Dataset& data);

/// Gradient of the mean exp-loss w.r.t. (u_plus, u_minus), stacked into 2d entries.
/// Throws UnderflowError when every exp(-z_n.w) underflows to zero.
Vector loss_gradient(const NetParams& params, const Dataset& data);
/// grad L / L via the shifted exponentials; finite for any gamma_tilde.
Vector normalized_direction(const NetParams& params, const Dataset& data);

/// c_D in s = c_D X int r dt: 4 for D = 2, alpha^{D-2} D (D-2) for D > 2.
double closed_form_factor(int depth, double alpha);

enum class StepMode { plain, normalized };

struct StepperConfig {
  double eta = 1e-3;
  StepMode mode = StepMode::normalized;
  std::int64_t max_steps = 1'000'000;
  std::int64_t record_every = 1;
  std::optional<double> gamma_tilde_target;
  double step_shrink = 0.5;
  int max_retries = 60;
  /// If positive, caps max_i |du_i| / u_i per step by shrinking eta. Off by default.
  double max_relative_update = 0.0;

  void validate() const;
};

/// A nonnegative time kept as log-magnitude; zero is log_abs = -inf, sign = 0.
struct LogTime {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  void add_log(double log_dt);
  double value() const { return sign == 0 ? 0.0 : std::exp(log_abs); }
};

struct TrajectoryRecord {
  std::int64_t step = 0;
  double eta = 0.0;  // step size of the update that produced this record
  LogTime flow_time;
  double gamma = 0.0;
  double gamma_tilde = 0.0;
  Vector w;
  /// c_D * X * integral of r dt; the argument of the closed-form solution.
  Vector s_accum;
  Vector u_plus;
  Vector u_minus;
  std::map<std::string, double> metrics;
};

struct SimState {
  NetParams params;
  TrajectoryRecord record;
};

SimState initial_state(const NetParams& params, const Dataset& data);

/// One update with exactly this eta; nullopt if it would leave u >= 0 or fail
/// to increase gamma_tilde.
std::optional<SimState> try_step(const SimState& state, const Dataset& data, StepMode mode, double eta);

/// One accepted update starting from cfg.eta, shrinking by cfg.step_shrink on
/// rejection. Throws StepUnderflowError after cfg.max_retries rejections.
SimState step(const SimState& state, const Dataset& data, const StepperConfig& cfg);

/// Thrown by run() when max_steps elapse before the gamma_tilde target; carries
/// the partial trajectory.
class BudgetExhausted : public Error {
 public:
  BudgetExhausted(std::string what, std::vector<TrajectoryRecord> partial)
      : Error(std::move(what)), partial_(std::move(partial)) {}
  const std::vector<TrajectoryRecord>& partial() const { return partial_; }

 private:
  std::vector<TrajectoryRecord> partial_;
};

/// Optional per-record hook, e.g. to attach metrics. Called on every recorded state.
using RecordHook = std::function<void(const SimState&, TrajectoryRecord&)>;

/// Iterates step() until the target is met (then bisects the last eta so that
/// |gamma_tilde - target| <= 1e-6 max(1, target)) or max_steps elapse. The
/// first and last records are always kept.
std::vector<TrajectoryRecord> run(const NetParams& params0, const Dataset& data, const StepperConfig& cfg,
                                  const RecordHook& hook = {});

/// ||w - 2 alpha^2 sinh(s)||_inf for D = 2, ||w - alpha^D h_D(s)||_inf for D > 2.
/// Throws DomainError when a component of s leaves (-1, 1) for D > 2.
double closed_form_residual(const TrajectoryRecord& record, double alpha, int depth);

/// K_nm = D^2 sum_i (u_plus_i^{2D-2} + u_minus_i^{2D-2}) x_ni x_mi on raw points.
Matrix tangent_kernel(const NetParams& params, const Dataset& data);
Matrix tangent_kernel(const Vector& u_plus, const Vector& u_minus, int depth, const Dataset& data);
/// 1 - <K_t, K_0>_F / (||K_t||_F ||K_0||_F). Throws DomainError on a zero kernel.
double kernel_distance(const Matrix& k_t, const Matrix& k_0);

/// Euler step of dw/dt = (2/N) D^2 alpha^{2D-2} sum_n exp(-z_n.w) z_n. The
/// normalized variant divides the drift by the loss of w.
Vector linearized_flow_step(const Vector& w_bar, const Dataset& data, double alpha, int depth, double eta,
                            StepMode mode = StepMode::plain);

struct LinearizedRecord {
  std::int64_t step = 0;
  double gamma = 0.0;
  double gamma_tilde = 0.0;
  Vector w;
};

/// Normalized linearized flow from w = 0 until gamma_tilde >= target (no
/// final-step refinement) or max_steps.
std::vector<LinearizedRecord> run_linearized(const Dataset& data, double alpha, int depth, double eta,
                                             double gamma_tilde_target, std::int64_t max_steps,
                                             std::int64_t record_every = 1);

}  // namespace diagnet

// Acceptance gate: one PASS/FAIL line per primary criterion, exit status 1 if
// any fails. Reference values come from the oracles in support.hpp or from
// closed forms written here, never from the solver under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "diagnet/data.hpp"
#include "diagnet/dynamics.hpp"
#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"
#include "diagnet/penalty.hpp"
#include "diagnet/regimes.hpp"
#include "support.hpp"

using namespace diagnet;
using diagnet::testing::bundled;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Every trajectory produced by the gate passes through here for the sandwich
// criterion, checked with the absolute tolerance 1e-12.
class SandwichTally {
 public:
  void add(const std::vector<TrajectoryRecord>& traj, std::size_t n_samples) {
    const double log_n = std::log(static_cast<double>(n_samples));
    for (const auto& r : traj) {
      worst_ = std::max({worst_, r.gamma - r.gamma_tilde, r.gamma_tilde - r.gamma - log_n});
      largest_ = std::max(largest_, r.gamma_tilde);
      ++records_;
    }
    ++trajectories_;
  }
  Verdict verdict() const {
    constexpr double tol = 1e-12;
    return {records_ > 0 && worst_ <= tol,
            fmt("%zu records in %zu trajectories up to gamma_tilde %.3g, worst violation %.3g (tol %.0e)", records_,
                trajectories_, largest_, worst_, tol)};
  }

 private:
  double worst_ = -std::numeric_limits<double>::infinity();
  double largest_ = 0.0;
  std::size_t records_ = 0;
  std::size_t trajectories_ = 0;
};

SandwichTally sandwich;

// gamma_tilde(t) >= log(1 + 2 D^2 alpha^(2D-2) gamma2^2 t) for plain GD.
Verdict loss_bound() {
  const Stopwatch clock;
  const Dataset ds = bundled("unique_l1.json");
  const double g2 = compute_stats(ds).gamma2;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t records = 0;
  for (const int depth : {2, 3}) {
    for (const double alpha : {0.5, 1.0}) {
      StepperConfig c;
      c.mode = StepMode::plain;
      c.eta = 1e-4;
      c.max_steps = 100'000;
      std::vector<TrajectoryRecord> traj;
      try {
        traj = run(NetParams::init(ds.dim(), depth, alpha), ds, c);
      } catch (const BudgetExhausted& e) {
        traj = e.partial();
      }
      if (traj.back().step != c.max_steps) return {false, fmt("D=%d alpha=%g stopped at step %lld", depth, alpha,
                                                              static_cast<long long>(traj.back().step))};
      for (const auto& r : traj) {
        const double t = r.flow_time.value();
        const double bound = std::log1p(2.0 * depth * depth * std::pow(alpha, 2 * depth - 2) * g2 * g2 * t);
        worst = std::min(worst, r.gamma_tilde - bound);
      }
      records += traj.size();
      sandwich.add(traj, ds.num_samples());
    }
  }
  const double secs = clock.seconds();
  return {worst >= 0.0 && secs < 60.0,
          fmt("%zu records, min(gamma_tilde - bound) = %.3g, %.1f s (limit 60 s)", records, worst, secs)};
}

// Largest closed-form residual over a run, relative to max(1, |w|_inf).
double worst_closed_form(const Dataset& ds, int depth, double eta) {
  StepperConfig c;
  c.eta = eta;
  c.gamma_tilde_target = 20.0;
  c.max_steps = 100'000'000;
  const double alpha = 1.0;
  const auto traj = run(NetParams::init(ds.dim(), depth, alpha), ds, c);
  sandwich.add(traj, ds.num_samples());
  double worst = 0.0;
  for (const auto& r : traj) {
    worst = std::max(worst, closed_form_residual(r, alpha, depth) / std::max(1.0, r.w.lpNorm<Eigen::Infinity>()));
  }
  return worst;
}

Verdict closed_form() {
  const Dataset ds = bundled("unique_l1.json");
  bool pass = true;
  std::ostringstream detail;
  for (const int depth : {2, 3}) {
    const double coarse = worst_closed_form(ds, depth, 1e-4);
    const double fine = worst_closed_form(ds, depth, 5e-5);
    const double ratio = coarse / fine;
    pass = pass && coarse <= 1e-2 && std::abs(ratio - 2.0) <= 0.1;
    detail << fmt("D=%d max residual %.3g at eta=1e-4, halving ratio %.4f; ", depth, coarse, ratio);
  }
  detail << "limits 1e-2 and 2 +- 0.1";
  return {pass, detail.str()};
}

Verdict penalty() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> log_mu(std::log(0.05), std::log(20.0));
  double fd_worst = 0.0;
  for (const int depth : {2, 3, 10}) {
    for (int k = 0; k < 10; ++k) {
      const PenaltySpec spec{depth, std::exp(log_mu(rng))};
      Eigen::VectorXd w(4);
      for (auto& x : w) x = coord(rng);
      const Eigen::VectorXd g = penalty_gradient(w, spec);
      const Eigen::VectorXd fd = diagnet::testing::central_gradient(
          [&](const Eigen::VectorXd& x) { return penalty_value(x, spec); }, w, 1e-5);
      fd_worst = std::max(fd_worst, (g - fd).norm() / g.norm());
    }
  }
  double round_trip = 0.0;
  for (const int depth : {3, 4, 10}) {
    for (double z = -0.95; z <= 0.95; z += 0.05) round_trip = std::max(round_trip, std::abs(h_inverse(h(z, depth), depth) - z));
  }
  double slope = std::abs(q(1e-4, 2) / 1e-8 / 0.25 - 1.0);
  for (const int depth : {3, 4, 10}) {
    const double d = depth;
    slope = std::max(slope, std::abs(h(1e-6, depth) / 1e-6 / (2.0 * d / (d - 2.0)) - 1.0));
    slope = std::max(slope, std::abs(q(1e-4, depth) / 1e-8 / ((d - 2.0) / (4.0 * d)) - 1.0));
  }
  return {fd_worst <= 1e-5 && round_trip <= 1e-10 && slope <= 1e-3,
          fmt("finite differences %.3g (tol 1e-5), h inverse round trip %.3g (tol 1e-10), slope limits %.3g (tol 1e-3)",
              fd_worst, round_trip, slope)};
}

Verdict solver_oracles() {
  const Stopwatch clock;
  double l2_angle = 0.0;
  double l1_gap = 0.0;
  double big_mu = 0.0;
  double small_mu = 0.0;
  std::string small_mu_where;
  int small_mu_misses = 0;
  int pairs = 0;
  for (const auto& name : diagnet::testing::small_datasets()) {
    const Dataset ds = bundled(name);
    const MarginSolution l2 = l2_max_margin(ds);
    const MarginSolution l1 = l1_max_margin(ds);
    l2_angle = std::max(l2_angle, diagnet::testing::angle_deg(l2.w, diagnet::testing::sphere_grid_l2(ds.effective()).direction));
    l1_gap = std::max(l1_gap, std::abs(l1.w.lpNorm<1>() - diagnet::testing::enumerate_l1_vertices(ds.effective()).objective));
    for (const int depth : {2, 3}) {
      const MarginSolution hi = q_mu_max_margin(ds, {depth, 1e4});
      big_mu = std::max(big_mu, (hi.w - l2.w).norm() / l2.w.norm());
      const MarginSolution lo = q_mu_max_margin(ds, {depth, 1e-4});
      // A degenerate l1 problem has a face of minimizers; compare the norm.
      const double rel = l1.unique_hint == Uniqueness::degenerate
                             ? std::abs(lo.w.lpNorm<1>() - l1.objective) / l1.objective
                             : (lo.w - l1.w).norm() / l1.w.norm();
      ++pairs;
      small_mu_misses += rel > 1e-2 ? 1 : 0;
      if (rel > small_mu) {
        small_mu = rel;
        small_mu_where = fmt("%s D=%d", name.c_str(), depth);
      }
    }
  }
  const double secs = clock.seconds();
  return {l2_angle <= 1e-3 && l1_gap <= 1e-9 && big_mu <= 1e-2 && small_mu <= 1e-2 && secs < 60.0,
          fmt("l2 vs sphere grid %.3g deg (tol 1e-3), l1 vs vertices %.3g (tol 1e-9), mu=1e4 vs l2 %.3g, mu=1e-4 vs l1 "
              "worst %.3g at %s, %d of %d (dataset, D) pairs over tol 1e-2, %.1f s",
              l2_angle, l1_gap, big_mu, small_mu, small_mu_where.c_str(), small_mu_misses, pairs, secs)};
}

SweepSpec unique_l1_sweep(std::vector<double> alphas, std::vector<StoppingRule> rules) {
  StepperConfig c;
  c.eta = 1e-3;
  c.max_steps = 200'000'000;
  c.record_every = 10;
  return SweepSpec{.dataset_name = "unique_l1",
                   .data = bundled("unique_l1.json"),
                   .depths = {2},
                   .alphas = std::move(alphas),
                   .rules = std::move(rules),
                   .stepper = c,
                   .scale_eta = true,
                   .metrics = MetricSelection{.kernel_distance = false, .closed_form = false, .excess = false},
                   .condition = false,
                   .rho0 = 1.01,
                   .keep_trajectories = true,
                   .workers = workers()};
}

// Runs a sweep, feeds its trajectories to the sandwich tally and drops them.
SweepResult run_tallied(const SweepSpec& spec) {
  SweepResult res = run_sweep(spec);
  for (auto& cell : res.cells) {
    sandwich.add(cell.trajectory, spec.data.num_samples());
    cell.trajectory.clear();
    cell.trajectory.shrink_to_fit();
  }
  return res;
}

Verdict kernel_regime() {
  const double alpha = 100.0;
  SweepSpec spec = unique_l1_sweep({alpha}, {StoppingRule::fixed(std::pow(alpha, 1.5))});
  spec.metrics.kernel_distance = true;
  const SweepCell cell = run_tallied(spec).cells.at(0);
  if (!cell.ok()) return {false, cell.error};
  return {cell.angle_l2 <= 3.0 && cell.kernel_distance < 0.05,
          fmt("alpha=100 gamma_tilde=%.6g: angle to l2 %.4f deg (tol 3), kernel distance %.3g (tol 0.05)",
              cell.gamma_tilde, cell.angle_l2, cell.kernel_distance)};
}

Verdict intermediate_regime() {
  const std::vector<double> alphas{10.0, 30.0, 100.0};
  const std::vector<double> mus{0.5, 0.1, 0.01};
  std::vector<StoppingRule> rules;
  for (const double mu : mus) rules.push_back(StoppingRule::mu_scaled(mu));
  const SweepResult res = run_tallied(unique_l1_sweep(alphas, rules));
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t m = 0; m < mus.size(); ++m) {
    std::vector<double> angles;
    for (const auto& cell : res.cells) {
      if (cell.rule.value != mus[m]) continue;
      if (!cell.ok()) return {false, cell.error};
      angles.push_back(cell.angle_qmu);
    }
    const bool monotone = angles[0] > angles[1] && angles[1] > angles[2];
    pass = pass && monotone && angles[2] < 2.0;
    detail << fmt("mu=%g: %.4g > %.4g > %.4g deg; ", mus[m], angles[0], angles[1], angles[2]);
  }
  detail << "alpha 10, 30, 100, final tol 2 deg";
  return {pass, detail.str()};
}

Verdict rich_regime() {
  SweepSpec spec = unique_l1_sweep({1.0}, {StoppingRule::fixed(1000.0)});
  spec.metrics.excess = true;
  const SweepCell cell = run_tallied(spec).cells.at(0);
  if (!cell.ok()) return {false, cell.error};
  return {cell.excess_l1 <= 0.05,
          fmt("alpha=1 gamma_tilde=%.6g: excess l1 %.4f (tol 0.05), angle to l1 %.3f deg", cell.gamma_tilde,
              cell.excess_l1, cell.angle_l1)};
}

// Condition 1 on windows [alpha^(D/2), alpha^D / mu] with the trajectory's own
// limit direction, for alpha in {10, 30, 100}.
Verdict condition1() {
  const std::vector<double> alphas{10.0, 30.0, 100.0};
  SweepSpec good = unique_l1_sweep(alphas, {StoppingRule::mu_scaled(0.1)});
  good.condition = true;
  SweepSpec bad = good;
  bad.dataset_name = "support_switch";
  bad.data = bundled("support_switch.json");
  bad.rules = {StoppingRule::mu_scaled(0.01)};
  std::string holds;
  std::string fails;
  bool pass = true;
  for (const auto& cell : run_tallied(good).cells) {
    pass = pass && cell.ok() && cell.condition_holds == true;
    holds += cell.condition_holds ? (*cell.condition_holds ? " holds" : " fails") : " n/a";
  }
  for (const auto& cell : run_tallied(bad).cells) {
    pass = pass && cell.ok() && cell.condition_holds == false;
    fails += cell.condition_holds ? (*cell.condition_holds ? " holds" : " fails") : " n/a";
  }
  return {pass, "unique_l1 mu=0.1 (want holds):" + holds + "; support_switch mu=0.01 (want fails):" + fails +
                    "; alpha 10, 30, 100, rho0 1.01"};
}

Verdict accuracy_slope() {
  AccuracySweepSpec spec{.data = bundled("unique_l1.json"),
                         .depths = {2, 3, 10},
                         .alpha_pow_d = {0.1, 0.3, 1.0, 3.0},
                         .threshold = 0.05,
                         .stepper = {},
                         .scale_eta = true,
                         .workers = workers()};
  spec.stepper.eta = 1e-3;
  spec.stepper.gamma_tilde_target = 1e6;
  spec.stepper.max_steps = 200'000'000;
  const auto cells = run_accuracy_sweep(spec);
  for (const auto& c : cells) {
    if (!c.error.empty()) return {false, c.error};
    if (!c.gamma_tilde) return {false, fmt("D=%d alpha^D=%g never reached the threshold", c.depth, c.alpha_pow_d)};
  }
  const auto fits = accuracy_vs_init_fit(fit_points(cells));
  const double slope = fits.at(2).slope;
  const double b2 = fits.at(2).intercept;
  const double b3 = fits.at(3).intercept;
  const double b10 = fits.at(10).intercept;
  return {slope >= 0.9 && slope <= 1.1 && b2 > b3 && b3 > b10,
          fmt("D=2 slope %.4f (want [0.9, 1.1]); intercepts D=2 %.4f, D=3 %.4f, D=10 %.4f (want strictly decreasing)",
              slope, b2, b3, b10)};
}

// First gamma_tilde at which the kernel distance exceeds 0.1, per depth.
Verdict kernel_distance_ordering() {
  const Dataset ds = bundled("unique_l1.json");
  std::vector<std::optional<double>> crossing;
  std::ostringstream detail;
  for (const int depth : {2, 3, 10}) {
    const NetParams p0 = NetParams::init(ds.dim(), depth, 1.0);
    const Matrix k0 = tangent_kernel(p0, ds);
    StepperConfig c;
    c.eta = 1e-3;
    c.gamma_tilde_target = 1e5;
    c.max_steps = 200'000'000;
    double peak = 0.0;
    const auto hit = gamma_tilde_at_crossing(
        p0, ds, c,
        [&](const SimState& st) {
          const double kd = kernel_distance(tangent_kernel(st.params, ds), k0);
          peak = std::max(peak, kd);
          return -kd;
        },
        -0.1);
    crossing.push_back(hit);
    if (hit) {
      detail << fmt("D=%d crosses at %.6g; ", depth, *hit);
    } else {
      detail << fmt("D=%d never crosses up to gamma_tilde 1e5 (peak %.3g); ", depth, peak);
    }
  }
  bool pass = std::all_of(crossing.begin(), crossing.end(), [](const auto& x) { return x.has_value(); });
  if (pass) pass = *crossing[0] > *crossing[1] && *crossing[1] > *crossing[2];
  detail << "alpha^D=1, threshold 0.1";
  return {pass, detail.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
  };
  // The sandwich runs last so that it sees every trajectory produced above it.
  const std::vector<Criterion> criteria{
      {"loss-bound", loss_bound},
      {"closed-form-dynamics", closed_form},
      {"penalty-correctness", penalty},
      {"solver-oracles", solver_oracles},
      {"kernel-regime", kernel_regime},
      {"intermediate-regime", intermediate_regime},
      {"rich-regime", rich_regime},
      {"condition1-discrimination", condition1},
      {"accuracy-vs-init-slope", accuracy_slope},
      {"kernel-distance-depth-ordering", kernel_distance_ordering},
      {"margin-sandwich", [] { return sandwich.verdict(); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const Stopwatch clock;
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), clock.seconds());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

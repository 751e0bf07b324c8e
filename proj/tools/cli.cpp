#include "cli.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "diagnet/error.hpp"

namespace diagnet::cli {

namespace {

template <typename T>
struct Unwrap {
  using type = T;
};
template <typename T>
struct Unwrap<std::optional<T>> {
  using type = T;
};

// Binds flags to scratch storage and copies only the flags actually given onto
// a config, after its TOML file (if any) has been applied.
template <typename Config>
class Overlay {
 public:
  explicit Overlay(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "TOML file with defaults for this command")->check(CLI::ExistingFile);
  }

  template <typename Field>
  CLI::Option* option(const std::string& names, Field Config::*field, const std::string& help) {
    auto value = std::make_shared<typename Unwrap<Field>::type>();
    CLI::Option* opt = app_->add_option(names, *value, help);
    appliers_.push_back([opt, value, field](Config& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& names, bool Config::*field, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(names, *value, help);
    appliers_.push_back([opt, value, field](Config& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  Config resolve() const {
    Config c;
    if (!config_path_.empty()) load_toml(config_path_, c);
    for (const auto& apply : appliers_) apply(c);
    return c;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<std::function<void(Config&)>> appliers_;
};

// Flags shared by every command.
template <typename Config>
void common(Overlay<Config>& o) {
  o.option("--data", &Config::data, "dataset file (.json/.csv) or generator uniform:N:d / sparse:N:d");
  o.option("--out", &Config::out, "output directory");
  o.option("--seed", &Config::seed, "seed for generated datasets");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient descent on depth-D diagonal linear networks with the exponential loss", "diagnet"};
  app.require_subcommand(1);
  const auto mode_check = CLI::IsMember({"plain", "normalized"});

  Overlay<SimulateConfig> sim(app.add_subcommand("simulate", "run one trajectory and write it as CSV/JSON"));
  common(sim);
  sim.option("--depth", &SimulateConfig::depth, "network depth D >= 2");
  sim.option("--alpha", &SimulateConfig::alpha, "initialization scale");
  sim.option("--eta", &SimulateConfig::eta, "base step size");
  sim.option("--mode", &SimulateConfig::mode, "plain or normalized")->check(mode_check);
  sim.option("--max-steps", &SimulateConfig::max_steps, "step budget");
  sim.option("--record-every", &SimulateConfig::record_every, "keep every k-th record");
  sim.flag("--scale-eta,!--no-scale-eta", &SimulateConfig::scale_eta, "divide eta by alpha^{2D-2} for alpha > 1");
  auto* gt = sim.option("--gamma-tilde", &SimulateConfig::gamma_tilde, "stop at this smoothed margin");
  sim.option("--mu", &SimulateConfig::mu, "stop at gamma_tilde = alpha^D / mu")->excludes(gt);
  sim.flag("--kernel-distance,!--no-kernel-distance", &SimulateConfig::kernel_distance, "record kernel distance");
  sim.flag("--closed-form,!--no-closed-form", &SimulateConfig::closed_form, "record closed-form residual");
  sim.flag("--excess,!--no-excess", &SimulateConfig::excess, "record excess l1/l2 norms");
  sim.option("--format", &SimulateConfig::format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

  Overlay<SolveConfig> solve(app.add_subcommand("solve", "solve one max-margin problem"));
  common(solve);
  solve.option("--objective", &SolveConfig::objective, "l2, l1, qmu or lqd")
      ->check(CLI::IsMember({"l2", "l1", "qmu", "lqd"}));
  solve.option("--depth", &SolveConfig::depth, "depth for qmu / lqd");
  solve.option("--mu", &SolveConfig::mu, "mu for qmu");
  solve.option("--w0", &SolveConfig::w0, "start point for lqd (default: the l1 solution)");

  Overlay<PathConfig> path(app.add_subcommand("path", "solve the Q_mu max-margin path on a descending grid"));
  common(path);
  path.option("--depth", &PathConfig::depth, "penalty depth");
  path.option("--mu", &PathConfig::mu, "explicit descending grid");
  path.option("--mu-max", &PathConfig::mu_max, "log grid start");
  path.option("--mu-min", &PathConfig::mu_min, "log grid end");
  path.option("--points", &PathConfig::points, "log grid size");

  Overlay<SweepConfig> sweep(app.add_subcommand("sweep", "run a (depth, alpha, stopping rule) grid"));
  common(sweep);
  sweep.option("--name", &SweepConfig::name, "dataset label in outputs");
  sweep.option("--depth", &SweepConfig::depths, "depths");
  sweep.option("--alpha", &SweepConfig::alphas, "initialization scales");
  sweep.option("--mu", &SweepConfig::mu, "mu_scaled stopping rules");
  sweep.option("--gamma-tilde", &SweepConfig::gamma_tilde, "fixed stopping rules");
  sweep.option("--eta", &SweepConfig::eta, "base step size");
  sweep.option("--mode", &SweepConfig::mode, "plain or normalized")->check(mode_check);
  sweep.option("--max-steps", &SweepConfig::max_steps, "step budget per cell");
  sweep.option("--record-every", &SweepConfig::record_every, "keep every k-th record");
  sweep.flag("--scale-eta,!--no-scale-eta", &SweepConfig::scale_eta, "divide eta by alpha^{2D-2} for alpha > 1");
  sweep.flag("--kernel-distance,!--no-kernel-distance", &SweepConfig::kernel_distance, "record kernel distance");
  sweep.flag("--closed-form,!--no-closed-form", &SweepConfig::closed_form, "record closed-form residual");
  sweep.flag("--excess,!--no-excess", &SweepConfig::excess, "record excess l1/l2 norms");
  sweep.flag("--condition,!--no-condition", &SweepConfig::condition, "check Condition 1 on mu_scaled cells");
  sweep.option("--rho0", &SweepConfig::rho0, "Condition 1 ratio bound");
  sweep.flag("--keep-trajectories,!--no-keep-trajectories", &SweepConfig::keep_trajectories,
             "write every cell's trajectory");
  sweep.option("--workers", &SweepConfig::workers, "worker threads");

  Overlay<ConditionConfig> cond(app.add_subcommand("check-condition", "check Condition 1 on a recorded trajectory"));
  common(cond);
  cond.option("--trajectory", &ConditionConfig::trajectory, "trajectory CSV or JSON");
  cond.option("--rho0", &ConditionConfig::rho0, "ratio bound > 1");
  cond.option("--window-lo", &ConditionConfig::window_lo, "window start (default alpha^{D/2})");
  cond.option("--window-hi", &ConditionConfig::window_hi, "window end (default: final record)");
  cond.option("--depth", &ConditionConfig::depth, "depth (default: trajectory config)");
  cond.option("--alpha", &ConditionConfig::alpha, "alpha (default: trajectory config)");
  cond.option("--w-hat", &ConditionConfig::w_hat, "final, qmu, l2 or l1")
      ->check(CLI::IsMember({"final", "qmu", "l2", "l1"}));
  cond.option("--mu", &ConditionConfig::mu, "mu for --w-hat qmu");

  Overlay<KernelConfig> kern(app.add_subcommand("kernel-distance", "tangent-kernel drift along a JSON trajectory"));
  common(kern);
  kern.option("--trajectory", &KernelConfig::trajectory, "trajectory JSON");
  kern.option("--depth", &KernelConfig::depth, "depth (default: trajectory config)");

  Overlay<FitConfig> fit(app.add_subcommand("fit", "gamma_tilde at an excess-l1 threshold over alpha^D, with fits"));
  common(fit);
  fit.option("--depth", &FitConfig::depths, "depths");
  fit.option("--alpha-pow-d", &FitConfig::alpha_pow_d, "alpha^D values");
  fit.option("--threshold", &FitConfig::threshold, "excess l1 threshold");
  fit.option("--eta", &FitConfig::eta, "base step size");
  fit.option("--mode", &FitConfig::mode, "plain or normalized")->check(mode_check);
  fit.option("--max-steps", &FitConfig::max_steps, "step budget per cell");
  fit.option("--max-gamma-tilde", &FitConfig::max_gamma_tilde, "give up beyond this gamma_tilde");
  fit.flag("--scale-eta,!--no-scale-eta", &FitConfig::scale_eta, "divide eta by alpha^{2D-2} for alpha > 1");
  fit.option("--workers", &FitConfig::workers, "worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (sim.app()->parsed()) return cmd_simulate(sim.resolve(), out, err);
    if (solve.app()->parsed()) return cmd_solve(solve.resolve(), out);
    if (path.app()->parsed()) return cmd_path(path.resolve(), out);
    if (sweep.app()->parsed()) return cmd_sweep(sweep.resolve(), out);
    if (cond.app()->parsed()) return cmd_check_condition(cond.resolve(), out);
    if (kern.app()->parsed()) return cmd_kernel_distance(kern.resolve(), out);
    if (fit.app()->parsed()) return cmd_fit(fit.resolve(), out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kModuleError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace diagnet::cli

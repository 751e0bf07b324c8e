#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "diagnet/export.hpp"
#include "diagnet/margins.hpp"
#include "diagnet/regimes.hpp"

namespace diagnet::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ofstream open_output(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write " + path.string());
  return file;
}

std::string vector_text(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

struct LoadedTrajectory {
  std::vector<TrajectoryRecord> records;
  json config = json::object();
};

LoadedTrajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trajectory " + path);
  LoadedTrajectory t;
  if (fs::path(path).extension() == ".json") {
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::istringstream records(text);
    t.records = read_trajectory_json(records);
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_object() && doc.contains("config")) t.config = doc["config"];
  } else {
    std::string first;
    std::getline(in, first);
    constexpr std::string_view prefix = "# config: ";
    if (first.rfind(prefix, 0) == 0) {
      const json cfg = json::parse(first.substr(prefix.size()), nullptr, false);
      if (cfg.is_object()) t.config = cfg;
    }
    in.seekg(0);
    t.records = read_trajectory_csv(in);
  }
  if (t.records.empty()) throw ConfigError("trajectory " + path + " has no records");
  return t;
}

template <typename T>
std::optional<T> from_echo(const json& config, const char* key) {
  if (config.contains(key) && !config[key].is_null()) return config[key].get<T>();
  return std::nullopt;
}

std::string dataset_name(const std::string& ref) {
  const fs::path p(ref);
  return p.has_stem() ? p.stem().string() : ref;
}

}  // namespace

int cmd_simulate(const SimulateConfig& c, std::ostream& out, std::ostream& err) {
  if (c.gamma_tilde && c.mu) throw ConfigError("give at most one of --gamma-tilde and --mu");
  if (c.format != "csv" && c.format != "json" && c.format != "both") {
    throw ConfigError("format must be csv, json or both");
  }
  const Dataset data = resolve_dataset(c.data, c.seed);

  StepperConfig cfg;
  cfg.eta = c.scale_eta ? scaled_eta(c.eta, c.alpha, c.depth) : c.eta;
  cfg.mode = parse_mode(c.mode);
  cfg.max_steps = c.max_steps;
  cfg.record_every = c.record_every;
  if (c.gamma_tilde) cfg.gamma_tilde_target = *c.gamma_tilde;
  if (c.mu) cfg.gamma_tilde_target = schedule_target(c.alpha, c.depth, StoppingRule::mu_scaled(*c.mu));
  cfg.validate();

  const NetParams params0 = NetParams::init(data.dim(), c.depth, c.alpha);
  MetricSelection selection{c.kernel_distance, c.closed_form, c.excess};
  Vector w_l1;
  Vector w_l2;
  if (c.excess) {
    w_l1 = l1_max_margin(data).w;
    w_l2 = l2_max_margin(data).w;
  }
  const RecordHook hook = metrics_hook(data, params0, selection, w_l1, w_l2);

  int code = kOk;
  std::vector<TrajectoryRecord> records;
  try {
    records = run(params0, data, cfg, hook);
  } catch (const BudgetExhausted& e) {
    records = e.partial();
    err << "error: " << e.what() << " (partial trajectory written)\n";
    code = kBudgetExhausted;
  }

  json echo = to_json(c);
  echo["resolved"] = {{"eta", cfg.eta},
                      {"gamma_tilde_target", cfg.gamma_tilde_target ? json(*cfg.gamma_tilde_target) : json(nullptr)}};
  const std::string config = echo.dump();
  if (c.format != "json") {
    auto file = open_output(c.out, "trajectory.csv");
    write_trajectory_csv(file, records, config);
  }
  if (c.format != "csv") {
    auto file = open_output(c.out, "trajectory.json");
    write_trajectory_json(file, records, config);
  }
  const TrajectoryRecord& last = records.back();
  out << "records=" << records.size() << " steps=" << last.step << " gamma=" << format_double(last.gamma)
      << " gamma_tilde=" << format_double(last.gamma_tilde) << " w=" << vector_text(last.w) << '\n';
  return code;
}

int cmd_solve(const SolveConfig& c, std::ostream& out) {
  const Dataset data = resolve_dataset(c.data, c.seed);
  MarginSolution sol;
  if (c.objective == "l2") {
    sol = l2_max_margin(data);
  } else if (c.objective == "l1") {
    sol = l1_max_margin(data);
  } else if (c.objective == "qmu") {
    sol = q_mu_max_margin(data, PenaltySpec{c.depth, c.mu});
  } else if (c.objective == "lqd") {
    Vector w0;
    if (c.w0.empty()) {
      w0 = l1_max_margin(data).w;
    } else {
      if (c.w0.size() != data.dim()) throw ConfigError("w0 must have one entry per coordinate");
      w0 = Eigen::Map<const Vector>(c.w0.data(), static_cast<Eigen::Index>(c.w0.size()));
    }
    sol = lp_quasi_stationary(data, c.depth, w0);
  } else {
    throw ConfigError("objective must be l2, l1, qmu or lqd, got '" + c.objective + "'");
  }
  auto file = open_output(c.out, "solution.json");
  write_solution_json(file, sol, to_json(c).dump());
  out << "objective=" << sol.objective_kind.name() << " w=" << vector_text(sol.w)
      << " value=" << format_double(sol.objective) << " kkt=" << format_double(sol.kkt.max());
  if (sol.unique_hint == Uniqueness::degenerate) out << " degenerate";
  if (sol.local_only) out << " local";
  out << '\n';
  return kOk;
}

int cmd_path(const PathConfig& c, std::ostream& out) {
  const Dataset data = resolve_dataset(c.data, c.seed);
  std::vector<double> grid = c.mu;
  if (grid.empty()) {
    if (c.points < 2 || !(c.mu_max > c.mu_min) || !(c.mu_min > 0.0)) {
      throw ConfigError("log grid needs points >= 2 and mu_max > mu_min > 0");
    }
    const double lo = std::log(c.mu_min);
    const double hi = std::log(c.mu_max);
    for (int k = 0; k < c.points; ++k) grid.push_back(std::exp(hi + (lo - hi) * k / (c.points - 1)));
  }
  const std::vector<MarginSolution> path = q_path(data, c.depth, grid);
  const Vector w_l2 = l2_max_margin(data).w;
  const Vector w_l1 = l1_max_margin(data).w;
  auto file = open_output(c.out, "path.csv");
  write_path_csv(file, grid, path, w_l2, w_l1, to_json(c).dump());
  out << "points=" << path.size() << " last mu=" << format_double(grid.back())
      << " angle_to_l1=" << format_double(angle_degrees(path.back().w, w_l1)) << '\n';
  return kOk;
}

int cmd_sweep(const SweepConfig& c, std::ostream& out) {
  std::vector<StoppingRule> rules;
  for (const double mu : c.mu) rules.push_back(StoppingRule::mu_scaled(mu));
  for (const double gt : c.gamma_tilde) rules.push_back(StoppingRule::fixed(gt));
  if (rules.empty()) throw ConfigError("sweep needs at least one mu or gamma_tilde stopping rule");
  for (const auto& rule : rules) rule.validate();
  StepperConfig stepper;
  stepper.eta = c.eta;
  stepper.mode = parse_mode(c.mode);
  stepper.max_steps = c.max_steps;
  stepper.record_every = c.record_every;
  stepper.validate();
  const SweepSpec spec{.dataset_name = c.name.empty() ? dataset_name(c.data) : c.name,
                       .data = resolve_dataset(c.data, c.seed),
                       .depths = c.depths,
                       .alphas = c.alphas,
                       .rules = std::move(rules),
                       .stepper = stepper,
                       .scale_eta = c.scale_eta,
                       .metrics = {c.kernel_distance, c.closed_form, c.excess},
                       .condition = c.condition,
                       .rho0 = c.rho0,
                       .keep_trajectories = c.keep_trajectories,
                       .workers = std::max<std::size_t>(1, c.workers)};

  const SweepResult result = run_sweep(spec);
  const std::string config = to_json(c).dump();
  {
    auto file = open_output(c.out, "sweep.csv");
    write_sweep_csv(file, result, config);
  }
  {
    auto file = open_output(c.out, "sweep.json");
    write_sweep_json(file, result, config);
  }
  std::size_t failed = 0;
  for (const auto& cell : result.cells) {
    if (!cell.ok()) ++failed;
    if (!cell.trajectory.empty()) {
      const std::string name = "trajectory_D" + std::to_string(cell.depth) + "_alpha" + format_double(cell.alpha) +
                               "_" + cell.rule.label() + ".csv";
      auto file = open_output((fs::path(c.out) / "trajectories").string(), name);
      json echo = json::parse(config);
      echo["cell"] = {{"depth", cell.depth}, {"alpha", cell.alpha}, {"rule", cell.rule.label()}};
      write_trajectory_csv(file, cell.trajectory, echo.dump());
    }
  }
  out << "cells=" << result.cells.size() << " failed=" << failed << '\n';
  return kOk;
}

int cmd_check_condition(const ConditionConfig& c, std::ostream& out) {
  const Dataset data = resolve_dataset(c.data, c.seed);
  const LoadedTrajectory traj = load_trajectory(c.trajectory);
  const std::optional<int> depth = c.depth ? c.depth : from_echo<int>(traj.config, "depth");
  const std::optional<double> alpha = c.alpha ? c.alpha : from_echo<double>(traj.config, "alpha");

  Vector w_hat;
  if (c.w_hat == "final") {
    const TrajectoryRecord& last = traj.records.back();
    if (!(last.gamma > 0.0)) throw ConfigError("final record has no positive margin to rescale by");
    w_hat = last.w / last.gamma;
  } else if (c.w_hat == "qmu") {
    const std::optional<double> mu = c.mu ? c.mu : from_echo<double>(traj.config, "mu");
    if (!mu || !depth) throw ConfigError("w_hat = qmu needs --mu and --depth (or a trajectory config echo)");
    w_hat = q_mu_max_margin(data, PenaltySpec{*depth, *mu}).w;
  } else if (c.w_hat == "l2") {
    w_hat = l2_max_margin(data).w;
  } else if (c.w_hat == "l1") {
    w_hat = l1_max_margin(data).w;
  } else {
    throw ConfigError("w_hat must be final, qmu, l2 or l1, got '" + c.w_hat + "'");
  }

  double window_lo = 0.0;
  if (c.window_lo) {
    window_lo = *c.window_lo;
  } else {
    if (!depth || !alpha) throw ConfigError("default window needs --depth and --alpha (or a trajectory config echo)");
    window_lo = default_window_lo(*alpha, *depth);
  }
  const ConditionReport report = condition1_check(traj.records, data, w_hat, c.rho0, window_lo, c.window_hi);
  auto file = open_output(c.out, "condition.json");
  write_condition_json(file, report, to_json(c).dump());
  out << "holds=" << (report.holds ? "true" : "false") << " window=[" << format_double(report.window_lo) << ", "
      << format_double(report.window_hi) << "] records=" << report.records_in_window;
  for (const auto& s : report.per_nonsupport_sample) out << " ratio[" << s.index << "]=" << format_double(s.min_ratio);
  out << '\n';
  return kOk;
}

int cmd_kernel_distance(const KernelConfig& c, std::ostream& out) {
  if (fs::path(c.trajectory).extension() != ".json") {
    throw ConfigError("kernel-distance needs a JSON trajectory (it carries u_plus and u_minus)");
  }
  const Dataset data = resolve_dataset(c.data, c.seed);
  const LoadedTrajectory traj = load_trajectory(c.trajectory);
  const std::optional<int> depth = c.depth ? c.depth : from_echo<int>(traj.config, "depth");
  if (!depth) throw ConfigError("kernel-distance needs --depth (or a trajectory config echo)");
  const TrajectoryRecord& first = traj.records.front();
  const Matrix k0 = tangent_kernel(first.u_plus, first.u_minus, *depth, data);

  auto file = open_output(c.out, "kernel_distance.csv");
  file << "# config: " << to_json(c).dump() << '\n' << "step,gamma_tilde,kernel_distance\n";
  double peak = 0.0;
  double last = 0.0;
  for (const auto& r : traj.records) {
    last = kernel_distance(tangent_kernel(r.u_plus, r.u_minus, *depth, data), k0);
    peak = std::max(peak, last);
    file << r.step << ',' << format_double(r.gamma_tilde) << ',' << format_double(last) << '\n';
  }
  out << "records=" << traj.records.size() << " final=" << format_double(last) << " max=" << format_double(peak)
      << '\n';
  return kOk;
}

int cmd_fit(const FitConfig& c, std::ostream& out) {
  StepperConfig stepper;
  stepper.eta = c.eta;
  stepper.mode = parse_mode(c.mode);
  stepper.max_steps = c.max_steps;
  stepper.gamma_tilde_target = c.max_gamma_tilde;
  stepper.validate();
  const AccuracySweepSpec spec{.data = resolve_dataset(c.data, c.seed),
                               .depths = c.depths,
                               .alpha_pow_d = c.alpha_pow_d,
                               .threshold = c.threshold,
                               .stepper = stepper,
                               .scale_eta = c.scale_eta,
                               .workers = std::max<std::size_t>(1, c.workers)};

  const std::vector<AccuracyCell> cells = run_accuracy_sweep(spec);
  const std::string config = to_json(c).dump();
  {
    auto file = open_output(c.out, "fit_points.csv");
    file << "# config: " << config << '\n' << "depth,alpha_pow_d,alpha,eta,gamma_tilde,error\n";
    for (const auto& cell : cells) {
      std::string error = cell.error;
      for (char& ch : error) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      file << cell.depth << ',' << format_double(cell.alpha_pow_d) << ',' << format_double(cell.alpha) << ','
           << format_double(cell.eta) << ',' << (cell.gamma_tilde ? format_double(*cell.gamma_tilde) : "") << ','
           << error << '\n';
    }
  }

  json fits = json::array();
  const std::vector<FitPoint> points = fit_points(cells);
  for (const int depth : c.depths) {
    std::vector<FitPoint> mine;
    for (const auto& p : points) {
      if (p.depth == depth) mine.push_back(p);
    }
    try {
      const LineFit f = accuracy_vs_init_fit(mine).at(depth);
      fits.push_back({{"depth", depth}, {"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual},
                      {"points", f.points}});
      out << "D=" << depth << " slope=" << format_double(f.slope) << " intercept=" << format_double(f.intercept)
          << " rms=" << format_double(f.residual) << '\n';
    } catch (const Error& e) {
      fits.push_back({{"depth", depth}, {"error", e.what()}});
      out << "D=" << depth << " no fit: " << e.what() << '\n';
    }
  }
  auto file = open_output(c.out, "fit.json");
  file << json({{"config", json::parse(config)}, {"threshold", c.threshold}, {"fits", fits}}).dump(2) << '\n';
  return kOk;
}

}  // namespace diagnet::cli

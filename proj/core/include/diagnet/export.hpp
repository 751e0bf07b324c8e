#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "diagnet/dynamics.hpp"
#include "diagnet/margins.hpp"
#include "diagnet/regimes.hpp"

namespace diagnet {

/// Shortest round-trip-safe text for a double: 17 significant digits, "nan",
/// "inf" or "-inf".
std::string format_double(double x);

// Every writer takes `config_json`, a JSON object text echoing the resolved
// configuration. CSV files carry it on a leading "# config: " line; JSON files
// under the "config" key.

/// Columns: step, log_flow_time, gamma, gamma_tilde, w_0..w_{d-1}, then the
/// union of metric keys in sorted order (blank where a record lacks one).
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                          const std::string& config_json);
/// JSON mirror with s_accum, u_plus, u_minus and eta per record.
void write_trajectory_json(std::ostream& out, std::span<const TrajectoryRecord> records,
                           const std::string& config_json);
/// Reads step, log_flow_time, gamma, gamma_tilde, w_* and metric columns back.
std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in);
/// Reads the JSON mirror back, including s_accum and parameters.
std::vector<TrajectoryRecord> read_trajectory_json(std::istream& in);

void write_solution_json(std::ostream& out, const MarginSolution& solution, const std::string& config_json);

/// One row per mu: mu, objective, w_*, angle_to_l2, angle_to_l1, kkt_max, and
/// azimuth/pitch when d = 3.
void write_path_csv(std::ostream& out, std::span<const double> mu_grid, std::span<const MarginSolution> path,
                    const Vector& w_l2, const Vector& w_l1, const std::string& config_json);

/// One row per cell: depth, alpha, rule, rule_value, target, eta, status,
/// steps, gamma, gamma_tilde, excess_l1, excess_l2, angle_l1, angle_l2,
/// angle_qmu, kernel_distance, closed_form_residual, condition_holds,
/// azimuth, pitch (d = 3 only), w_*, error.
void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::string& config_json);
void write_sweep_json(std::ostream& out, const SweepResult& result, const std::string& config_json);

void write_condition_json(std::ostream& out, const ConditionReport& report, const std::string& config_json);

}  // namespace diagnet

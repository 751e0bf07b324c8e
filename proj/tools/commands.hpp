#pragma once

#include <iosfwd>

#include "config.hpp"

namespace diagnet::cli {

// Thin adapters: resolve inputs, call the library, serialize. Each returns an
// ExitCode and writes a one-paragraph summary to `out`.

int cmd_simulate(const SimulateConfig& c, std::ostream& out, std::ostream& err);
int cmd_solve(const SolveConfig& c, std::ostream& out);
int cmd_path(const PathConfig& c, std::ostream& out);
int cmd_sweep(const SweepConfig& c, std::ostream& out);
int cmd_check_condition(const ConditionConfig& c, std::ostream& out);
int cmd_kernel_distance(const KernelConfig& c, std::ostream& out);
int cmd_fit(const FitConfig& c, std::ostream& out);

}  // namespace diagnet::cli

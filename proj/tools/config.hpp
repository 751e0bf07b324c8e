#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diagnet/data.hpp"
#include "diagnet/dynamics.hpp"

namespace diagnet::cli {

// Resolved settings of each subcommand. Defaults live here; a TOML file may
// set any field by its snake_case name, and command-line flags override both.
// Every output embeds to_json() of the config that produced it.

struct SimulateConfig {
  std::string data;
  int depth = 2;
  double alpha = 1.0;
  double eta = 1e-3;
  std::string mode = "normalized";
  std::int64_t max_steps = 10'000'000;
  std::int64_t record_every = 1;
  bool scale_eta = false;
  std::optional<double> gamma_tilde;
  std::optional<double> mu;
  bool kernel_distance = true;
  bool closed_form = false;
  bool excess = true;
  std::string format = "both";  // csv, json or both
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct SolveConfig {
  std::string data;
  std::string objective = "l2";  // l2, l1, qmu, lqd
  int depth = 2;
  double mu = 1.0;
  std::vector<double> w0;  // lqd start; the l1 solution when empty
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct PathConfig {
  std::string data;
  int depth = 2;
  std::vector<double> mu;  // explicit grid; overrides the log grid below
  double mu_max = 1e4;
  double mu_min = 1e-4;
  int points = 32;
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::string name;
  std::string data;
  std::vector<int> depths{2};
  std::vector<double> alphas{1.0};
  std::vector<double> mu;           // mu_scaled rules
  std::vector<double> gamma_tilde;  // fixed rules
  double eta = 1e-3;
  std::string mode = "normalized";
  std::int64_t max_steps = 100'000'000;
  std::int64_t record_every = 1;
  bool scale_eta = true;
  bool kernel_distance = true;
  bool closed_form = false;
  bool excess = true;
  bool condition = false;
  double rho0 = 1.01;
  bool keep_trajectories = false;
  std::size_t workers = 1;
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct ConditionConfig {
  std::string trajectory;
  std::string data;
  double rho0 = 1.01;
  std::optional<double> window_lo;  // default alpha^{D/2}
  std::optional<double> window_hi;  // default: the final record
  std::optional<int> depth;         // default: from the trajectory's config echo
  std::optional<double> alpha;
  std::string w_hat = "final";  // final, qmu, l2, l1
  std::optional<double> mu;     // for w_hat = qmu
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct KernelConfig {
  std::string trajectory;  // JSON trajectory carrying u_plus / u_minus
  std::string data;
  std::optional<int> depth;
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct FitConfig {
  std::string data;
  std::vector<int> depths{2};
  std::vector<double> alpha_pow_d{0.1, 0.3, 1.0, 3.0};
  double threshold = 0.05;
  double eta = 1e-3;
  std::string mode = "normalized";
  std::int64_t max_steps = 100'000'000;
  double max_gamma_tilde = 1e6;
  bool scale_eta = true;
  std::size_t workers = 1;
  std::string out = ".";
  std::uint64_t seed = 0;
};

void load_toml(const std::filesystem::path& path, SimulateConfig& c);
void load_toml(const std::filesystem::path& path, SolveConfig& c);
void load_toml(const std::filesystem::path& path, PathConfig& c);
void load_toml(const std::filesystem::path& path, SweepConfig& c);
void load_toml(const std::filesystem::path& path, ConditionConfig& c);
void load_toml(const std::filesystem::path& path, KernelConfig& c);
void load_toml(const std::filesystem::path& path, FitConfig& c);

nlohmann::json to_json(const SimulateConfig& c);
nlohmann::json to_json(const SolveConfig& c);
nlohmann::json to_json(const PathConfig& c);
nlohmann::json to_json(const SweepConfig& c);
nlohmann::json to_json(const ConditionConfig& c);
nlohmann::json to_json(const KernelConfig& c);
nlohmann::json to_json(const FitConfig& c);

/// A dataset file, or a seeded generator: "uniform:N:d" draws coordinates from
/// U(0, 1); "sparse:N:d" sets the first coordinate to 1 and the rest to U(0, 0.5).
Dataset resolve_dataset(const std::string& ref, std::uint64_t seed);

StepMode parse_mode(const std::string& mode);

/// Thrown for configuration problems; reported as usage errors.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace diagnet::cli

#include "config.hpp"

#include <charconv>
#include <set>
#include <string_view>

#include <toml.hpp>

#include "diagnet/error.hpp"

namespace diagnet::cli {

namespace {

using nlohmann::json;

// Typed reads from a parsed TOML table. Every key must be consumed by a read;
// leftovers are reported as unknown so typos fail loudly.
class TomlSource {
 public:
  explicit TomlSource(const std::filesystem::path& path) : path_(path.string()) {
    try {
      table_ = toml::parse_file(path_);
    } catch (const toml::parse_error& e) {
      throw ConfigError(path_ + ": " + std::string(e.description()));
    }
  }

  void read(std::string_view key, std::string& out) { scalar<std::string>(key, out); }
  void read(std::string_view key, bool& out) { scalar<bool>(key, out); }
  void read(std::string_view key, double& out) { scalar<double>(key, out); }
  void read(std::string_view key, int& out) { out = static_cast<int>(integer(key, out)); }
  void read(std::string_view key, std::int64_t& out) { out = integer(key, out); }
  void read(std::string_view key, std::uint64_t& out) {
    const std::int64_t v = integer(key, static_cast<std::int64_t>(out));
    if (v < 0) throw ConfigError(path_ + ": '" + std::string(key) + "' must be nonnegative");
    out = static_cast<std::uint64_t>(v);
  }
  template <typename T>
  void read(std::string_view key, std::optional<T>& out) {
    if (!table_.contains(key)) return;
    T v{};
    read(key, v);
    out = v;
  }
  template <typename T>
  void read(std::string_view key, std::vector<T>& out) {
    seen_.emplace(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    const toml::array* arr = node->as_array();
    if (!arr) throw ConfigError(path_ + ": '" + std::string(key) + "' must be an array");
    out.clear();
    for (const auto& el : *arr) {
      const std::optional<T> v = el.value<T>();
      if (!v) throw ConfigError(path_ + ": '" + std::string(key) + "' has an element of the wrong type");
      out.push_back(*v);
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : table_) {
      if (!seen_.contains(std::string(k.str()))) {
        throw ConfigError(path_ + ": unknown key '" + std::string(k.str()) + "'");
      }
    }
  }

 private:
  template <typename T>
  void scalar(std::string_view key, T& out) {
    seen_.emplace(key);
    const toml::node* node = table_.get(key);
    if (!node) return;
    const std::optional<T> v = node->value<T>();
    if (!v) throw ConfigError(path_ + ": '" + std::string(key) + "' has the wrong type");
    out = *v;
  }
  std::int64_t integer(std::string_view key, std::int64_t fallback) {
    std::int64_t v = fallback;
    seen_.emplace(key);
    const toml::node* node = table_.get(key);
    if (!node) return v;
    if (!node->is_integer()) throw ConfigError(path_ + ": '" + std::string(key) + "' must be an integer");
    return node->value<std::int64_t>().value();
  }

  std::string path_;
  toml::table table_;
  std::set<std::string, std::less<>> seen_;
};

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::size_t parse_count(std::string_view text, const std::string& ref) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || v == 0) {
    throw ConfigError("bad generator reference '" + ref + "', expected kind:N:d");
  }
  return v;
}

}  // namespace

void load_toml(const std::filesystem::path& path, SimulateConfig& c) {
  TomlSource t(path);
  t.read("data", c.data);
  t.read("depth", c.depth);
  t.read("alpha", c.alpha);
  t.read("eta", c.eta);
  t.read("mode", c.mode);
  t.read("max_steps", c.max_steps);
  t.read("record_every", c.record_every);
  t.read("scale_eta", c.scale_eta);
  t.read("gamma_tilde", c.gamma_tilde);
  t.read("mu", c.mu);
  t.read("kernel_distance", c.kernel_distance);
  t.read("closed_form", c.closed_form);
  t.read("excess", c.excess);
  t.read("format", c.format);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, SolveConfig& c) {
  TomlSource t(path);
  t.read("data", c.data);
  t.read("objective", c.objective);
  t.read("depth", c.depth);
  t.read("mu", c.mu);
  t.read("w0", c.w0);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, PathConfig& c) {
  TomlSource t(path);
  t.read("data", c.data);
  t.read("depth", c.depth);
  t.read("mu", c.mu);
  t.read("mu_max", c.mu_max);
  t.read("mu_min", c.mu_min);
  t.read("points", c.points);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, SweepConfig& c) {
  TomlSource t(path);
  t.read("name", c.name);
  t.read("data", c.data);
  t.read("depths", c.depths);
  t.read("alphas", c.alphas);
  t.read("mu", c.mu);
  t.read("gamma_tilde", c.gamma_tilde);
  t.read("eta", c.eta);
  t.read("mode", c.mode);
  t.read("max_steps", c.max_steps);
  t.read("record_every", c.record_every);
  t.read("scale_eta", c.scale_eta);
  t.read("kernel_distance", c.kernel_distance);
  t.read("closed_form", c.closed_form);
  t.read("excess", c.excess);
  t.read("condition", c.condition);
  t.read("rho0", c.rho0);
  t.read("keep_trajectories", c.keep_trajectories);
  t.read("workers", c.workers);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, ConditionConfig& c) {
  TomlSource t(path);
  t.read("trajectory", c.trajectory);
  t.read("data", c.data);
  t.read("rho0", c.rho0);
  t.read("window_lo", c.window_lo);
  t.read("window_hi", c.window_hi);
  t.read("depth", c.depth);
  t.read("alpha", c.alpha);
  t.read("w_hat", c.w_hat);
  t.read("mu", c.mu);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, KernelConfig& c) {
  TomlSource t(path);
  t.read("trajectory", c.trajectory);
  t.read("data", c.data);
  t.read("depth", c.depth);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

void load_toml(const std::filesystem::path& path, FitConfig& c) {
  TomlSource t(path);
  t.read("data", c.data);
  t.read("depths", c.depths);
  t.read("alpha_pow_d", c.alpha_pow_d);
  t.read("threshold", c.threshold);
  t.read("eta", c.eta);
  t.read("mode", c.mode);
  t.read("max_steps", c.max_steps);
  t.read("max_gamma_tilde", c.max_gamma_tilde);
  t.read("scale_eta", c.scale_eta);
  t.read("workers", c.workers);
  t.read("out", c.out);
  t.read("seed", c.seed);
  t.reject_unknown();
}

json to_json(const SimulateConfig& c) {
  return {{"command", "simulate"},       {"data", c.data},
          {"depth", c.depth},            {"alpha", c.alpha},
          {"eta", c.eta},                {"mode", c.mode},
          {"max_steps", c.max_steps},    {"record_every", c.record_every},
          {"scale_eta", c.scale_eta},    {"gamma_tilde", optional_json(c.gamma_tilde)},
          {"mu", optional_json(c.mu)},   {"kernel_distance", c.kernel_distance},
          {"closed_form", c.closed_form}, {"excess", c.excess},
          {"format", c.format},          {"out", c.out},
          {"seed", c.seed}};
}

json to_json(const SolveConfig& c) {
  return {{"command", "solve"}, {"data", c.data}, {"objective", c.objective}, {"depth", c.depth},
          {"mu", c.mu},         {"w0", c.w0},     {"out", c.out},             {"seed", c.seed}};
}

json to_json(const PathConfig& c) {
  return {{"command", "path"}, {"data", c.data},     {"depth", c.depth}, {"mu", c.mu},
          {"mu_max", c.mu_max}, {"mu_min", c.mu_min}, {"points", c.points}, {"out", c.out},
          {"seed", c.seed}};
}

json to_json(const SweepConfig& c) {
  return {{"command", "sweep"},
          {"name", c.name},
          {"data", c.data},
          {"depths", c.depths},
          {"alphas", c.alphas},
          {"mu", c.mu},
          {"gamma_tilde", c.gamma_tilde},
          {"eta", c.eta},
          {"mode", c.mode},
          {"max_steps", c.max_steps},
          {"record_every", c.record_every},
          {"scale_eta", c.scale_eta},
          {"kernel_distance", c.kernel_distance},
          {"closed_form", c.closed_form},
          {"excess", c.excess},
          {"condition", c.condition},
          {"rho0", c.rho0},
          {"keep_trajectories", c.keep_trajectories},
          {"workers", c.workers},
          {"out", c.out},
          {"seed", c.seed}};
}

json to_json(const ConditionConfig& c) {
  return {{"command", "check-condition"},
          {"trajectory", c.trajectory},
          {"data", c.data},
          {"rho0", c.rho0},
          {"window_lo", optional_json(c.window_lo)},
          {"window_hi", optional_json(c.window_hi)},
          {"depth", optional_json(c.depth)},
          {"alpha", optional_json(c.alpha)},
          {"w_hat", c.w_hat},
          {"mu", optional_json(c.mu)},
          {"out", c.out},
          {"seed", c.seed}};
}

json to_json(const KernelConfig& c) {
  return {{"command", "kernel-distance"}, {"trajectory", c.trajectory}, {"data", c.data},
          {"depth", optional_json(c.depth)}, {"out", c.out},          {"seed", c.seed}};
}

json to_json(const FitConfig& c) {
  return {{"command", "fit"},
          {"data", c.data},
          {"depths", c.depths},
          {"alpha_pow_d", c.alpha_pow_d},
          {"threshold", c.threshold},
          {"eta", c.eta},
          {"mode", c.mode},
          {"max_steps", c.max_steps},
          {"max_gamma_tilde", c.max_gamma_tilde},
          {"scale_eta", c.scale_eta},
          {"workers", c.workers},
          {"out", c.out},
          {"seed", c.seed}};
}

Dataset resolve_dataset(const std::string& ref, std::uint64_t seed) {
  if (ref.empty()) throw ConfigError("no dataset given (--data)");
  for (const std::string_view kind : {"uniform", "sparse"}) {
    if (ref.rfind(std::string(kind) + ":", 0) != 0) continue;
    const std::string_view rest = std::string_view(ref).substr(kind.size() + 1);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw ConfigError("bad generator reference '" + ref + "', expected kind:N:d");
    const std::size_t n = parse_count(rest.substr(0, colon), ref);
    const std::size_t d = parse_count(rest.substr(colon + 1), ref);
    return kind == "uniform" ? uniform_random_dataset(n, d, 0.0, 1.0, seed) : sparse_random_dataset(n, d, 0.5, seed);
  }
  return load_dataset(ref);
}

StepMode parse_mode(const std::string& mode) {
  if (mode == "plain") return StepMode::plain;
  if (mode == "normalized") return StepMode::normalized;
  throw ConfigError("mode must be 'plain' or 'normalized', got '" + mode + "'");
}

}  // namespace diagnet::cli

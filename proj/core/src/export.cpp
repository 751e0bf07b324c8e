#include "diagnet/export.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "diagnet/error.hpp"

namespace diagnet {

namespace {

using nlohmann::json;

json parse_config(const std::string& config_json) {
  if (config_json.empty()) return json::object();
  try {
    return json::parse(config_json);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config echo is not valid JSON: ") + e.what());
  }
}

// Non-finite doubles become strings so the JSON stays valid.
json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Vector to_vector(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = a[i].is_string() ? std::stod(a[i].get<std::string>()) : a[i].get<double>();
  }
  return v;
}

double to_double(const json& x) { return x.is_string() ? std::stod(x.get<std::string>()) : x.get<double>(); }

void write_config_line(std::ostream& out, const std::string& config_json) {
  out << "# config: " << parse_config(config_json).dump() << '\n';
}

// JSON numbers are emitted with 17 significant digits by this dump.
void dump(std::ostream& out, const json& j) {
  out << j.dump(2, ' ', false, json::error_handler_t::strict) << '\n';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* uniqueness_name(Uniqueness u) {
  switch (u) {
    case Uniqueness::unique:
      return "unique";
    case Uniqueness::degenerate:
      return "degenerate";
    case Uniqueness::unknown:
      return "unknown";
  }
  return "unknown";
}

json kkt_json(const KktResiduals& k) {
  return {{"stationarity", number(k.stationarity)},
          {"primal", number(k.primal)},
          {"complementarity", number(k.complementarity)}};
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                          const std::string& config_json) {
  write_config_line(out, config_json);
  std::set<std::string> keys;
  Eigen::Index d = 0;
  for (const auto& r : records) {
    for (const auto& [k, v] : r.metrics) keys.insert(k);
    d = std::max(d, r.w.size());
  }
  out << "step,log_flow_time,gamma,gamma_tilde";
  for (Eigen::Index i = 0; i < d; ++i) out << ",w_" << i;
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const auto& r : records) {
    out << r.step << ',' << format_double(r.flow_time.log_abs) << ',' << format_double(r.gamma) << ','
        << format_double(r.gamma_tilde);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(r.w[i]);
    for (const auto& k : keys) {
      out << ',';
      if (auto it = r.metrics.find(k); it != r.metrics.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

void write_trajectory_json(std::ostream& out, std::span<const TrajectoryRecord> records,
                           const std::string& config_json) {
  json rows = json::array();
  for (const auto& r : records) {
    json m = json::object();
    for (const auto& [k, v] : r.metrics) m[k] = number(v);
    rows.push_back({{"step", r.step},
                    {"eta", number(r.eta)},
                    {"log_flow_time", number(r.flow_time.log_abs)},
                    {"gamma", number(r.gamma)},
                    {"gamma_tilde", number(r.gamma_tilde)},
                    {"w", vec(r.w)},
                    {"s_accum", vec(r.s_accum)},
                    {"u_plus", vec(r.u_plus)},
                    {"u_minus", vec(r.u_minus)},
                    {"metrics", m}});
  }
  dump(out, {{"config", parse_config(config_json)}, {"records", rows}});
}

std::vector<TrajectoryRecord> read_trajectory_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.size() < 4 || header[0] != "step" || header[3] != "gamma_tilde") {
    throw ParseError("trajectory CSV header must start with step,log_flow_time,gamma,gamma_tilde");
  }
  std::vector<std::size_t> w_cols;
  std::vector<std::pair<std::size_t, std::string>> metric_cols;
  for (std::size_t c = 4; c < header.size(); ++c) {
    if (header[c].rfind("w_", 0) == 0) {
      w_cols.push_back(c);
    } else {
      metric_cols.emplace_back(c, header[c]);
    }
  }
  std::vector<TrajectoryRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ParseError("trajectory CSV row has the wrong number of cells");
    try {
      TrajectoryRecord r;
      r.step = std::stoll(cells[0]);
      const double log_t = std::stod(cells[1]);
      if (std::isfinite(log_t)) r.flow_time.add_log(log_t);
      r.gamma = std::stod(cells[2]);
      r.gamma_tilde = std::stod(cells[3]);
      r.w.resize(static_cast<Eigen::Index>(w_cols.size()));
      for (std::size_t i = 0; i < w_cols.size(); ++i) r.w[static_cast<Eigen::Index>(i)] = std::stod(cells[w_cols[i]]);
      for (const auto& [c, name] : metric_cols) {
        if (!cells[c].empty()) r.metrics[name] = std::stod(cells[c]);
      }
      records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("bad number in trajectory CSV: ") + e.what());
    }
  }
  return records;
}

std::vector<TrajectoryRecord> read_trajectory_json(std::istream& in) {
  std::vector<TrajectoryRecord> records;
  try {
    const json doc = json::parse(in);
    for (const auto& row : doc.at("records")) {
      TrajectoryRecord r;
      r.step = row.at("step").get<std::int64_t>();
      r.eta = to_double(row.at("eta"));
      const double log_t = to_double(row.at("log_flow_time"));
      if (std::isfinite(log_t)) r.flow_time.add_log(log_t);
      r.gamma = to_double(row.at("gamma"));
      r.gamma_tilde = to_double(row.at("gamma_tilde"));
      r.w = to_vector(row.at("w"));
      r.s_accum = to_vector(row.at("s_accum"));
      r.u_plus = to_vector(row.at("u_plus"));
      r.u_minus = to_vector(row.at("u_minus"));
      for (const auto& [k, v] : row.at("metrics").items()) r.metrics[k] = to_double(v);
      records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad trajectory JSON: ") + e.what());
  }
  return records;
}

void write_solution_json(std::ostream& out, const MarginSolution& s, const std::string& config_json) {
  json j = {{"config", parse_config(config_json)},
            {"objective_kind", s.objective_kind.name()},
            {"w", vec(s.w)},
            {"objective", number(s.objective)},
            {"nu", vec(s.nu)},
            {"kkt_residuals", kkt_json(s.kkt)},
            {"unique_hint", uniqueness_name(s.unique_hint)},
            {"local_only", s.local_only},
            {"iterations", s.iterations}};
  if (s.objective_kind.kind == MarginObjective::Kind::q_mu) {
    j["depth"] = s.objective_kind.penalty.depth;
    j["mu"] = number(s.objective_kind.penalty.mu);
  } else if (s.objective_kind.kind == MarginObjective::Kind::quasi_norm) {
    j["depth"] = s.objective_kind.penalty.depth;
  }
  dump(out, j);
}

void write_path_csv(std::ostream& out, std::span<const double> mu_grid, std::span<const MarginSolution> path,
                    const Vector& w_l2, const Vector& w_l1, const std::string& config_json) {
  if (mu_grid.size() != path.size()) throw DomainError("path and grid sizes differ");
  write_config_line(out, config_json);
  const Eigen::Index d = w_l2.size();
  out << "mu,objective";
  for (Eigen::Index i = 0; i < d; ++i) out << ",w_" << i;
  out << ",angle_to_l2,angle_to_l1,kkt_max";
  if (d == 3) out << ",azimuth,pitch";
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto& s = path[k];
    out << format_double(mu_grid[k]) << ',' << format_double(s.objective);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(s.w[i]);
    out << ',' << format_double(angle_degrees(s.w, w_l2)) << ',' << format_double(angle_degrees(s.w, w_l1)) << ','
        << format_double(s.kkt.max());
    if (d == 3) {
      const SphereCoords c = sphere_coords(s.w);
      out << ',' << format_double(c.azimuth) << ',' << format_double(c.pitch);
    }
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::string& config_json) {
  write_config_line(out, config_json);
  const Eigen::Index d = result.l2.w.size();
  out << "depth,alpha,rule,rule_value,target,eta,status,steps,gamma,gamma_tilde,excess_l1,excess_l2,"
         "angle_l1,angle_l2,angle_qmu,kernel_distance,closed_form_residual,condition_holds";
  if (d == 3) out << ",azimuth,pitch";
  for (Eigen::Index i = 0; i < d; ++i) out << ",w_" << i;
  out << ",error\n";
  for (const auto& c : result.cells) {
    out << c.depth << ',' << format_double(c.alpha) << ','
        << (c.rule.kind == StoppingRule::Kind::mu_scaled ? "mu_scaled" : "fixed_gamma_tilde") << ','
        << format_double(c.rule.value) << ',' << format_double(c.target) << ',' << format_double(c.eta) << ','
        << (c.ok() ? "ok" : "error") << ',' << c.steps << ',' << format_double(c.gamma) << ','
        << format_double(c.gamma_tilde) << ',' << format_double(c.excess_l1) << ',' << format_double(c.excess_l2)
        << ',' << format_double(c.angle_l1) << ',' << format_double(c.angle_l2) << ','
        << format_double(c.angle_qmu) << ',' << format_double(c.kernel_distance) << ','
        << format_double(c.closed_form_residual) << ','
        << (c.condition_holds ? (*c.condition_holds ? "true" : "false") : "");
    const bool has_w = c.ok() && c.w.size() == d && c.w.norm() > 0.0;
    if (d == 3) {
      if (has_w) {
        const SphereCoords sc = sphere_coords(c.w);
        out << ',' << format_double(sc.azimuth) << ',' << format_double(sc.pitch);
      } else {
        out << ",,";
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << (c.w.size() == d ? format_double(c.w[i]) : "");
    std::string err = c.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << ',' << err << '\n';
  }
}

void write_sweep_json(std::ostream& out, const SweepResult& result, const std::string& config_json) {
  json cells = json::array();
  for (const auto& c : result.cells) {
    json cell = {{"depth", c.depth},
                 {"alpha", number(c.alpha)},
                 {"rule", c.rule.kind == StoppingRule::Kind::mu_scaled ? "mu_scaled" : "fixed_gamma_tilde"},
                 {"rule_value", number(c.rule.value)},
                 {"target", number(c.target)},
                 {"eta", number(c.eta)},
                 {"status", c.ok() ? "ok" : "error"},
                 {"error", c.error},
                 {"steps", c.steps},
                 {"gamma", number(c.gamma)},
                 {"gamma_tilde", number(c.gamma_tilde)},
                 {"w", vec(c.w)},
                 {"excess_l1", number(c.excess_l1)},
                 {"excess_l2", number(c.excess_l2)},
                 {"angle_l1", number(c.angle_l1)},
                 {"angle_l2", number(c.angle_l2)},
                 {"angle_qmu", number(c.angle_qmu)},
                 {"kernel_distance", number(c.kernel_distance)},
                 {"closed_form_residual", number(c.closed_form_residual)},
                 {"condition_holds", c.condition_holds ? json(*c.condition_holds) : json(nullptr)}};
    if (!c.trajectory.empty()) {
      std::ostringstream traj;
      write_trajectory_json(traj, c.trajectory, "");
      cell["trajectory"] = json::parse(traj.str()).at("records");
    }
    cells.push_back(std::move(cell));
  }
  dump(out, {{"config", parse_config(config_json)},
             {"dataset", result.dataset_name},
             {"l1", {{"w", vec(result.l1.w)}, {"unique_hint", uniqueness_name(result.l1.unique_hint)}}},
             {"l2", {{"w", vec(result.l2.w)}}},
             {"cells", cells}});
}

void write_condition_json(std::ostream& out, const ConditionReport& r, const std::string& config_json) {
  json samples = json::array();
  for (const auto& s : r.per_nonsupport_sample) samples.push_back({{"index", s.index}, {"min_ratio", number(s.min_ratio)}});
  dump(out, {{"config", parse_config(config_json)},
             {"rho0", number(r.rho0)},
             {"gamma_tilde_star", number(r.gamma_tilde_star)},
             {"window", {number(r.window_lo), number(r.window_hi)}},
             {"records_in_window", r.records_in_window},
             {"per_nonsupport_sample", samples},
             {"holds", r.holds}});
}

}  // namespace diagnet

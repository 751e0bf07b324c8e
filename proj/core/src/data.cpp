#include "diagnet/data.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "diagnet/error.hpp"
#include "diagnet/margins.hpp"

namespace diagnet {

Dataset::Dataset(Matrix points, std::vector<int> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.rows() == 0 || points_.cols() == 0) {
    throw DomainError("dataset must contain at least one sample of dimension >= 1");
  }
  if (static_cast<std::size_t>(points_.rows()) != labels_.size()) {
    throw DomainError("number of labels does not match number of points");
  }
  if (!points_.allFinite()) {
    throw DomainError("dataset contains non-finite coordinates");
  }
  effective_.resize(points_.cols(), points_.rows());
  for (Eigen::Index n = 0; n < points_.rows(); ++n) {
    const int y = labels_[static_cast<std::size_t>(n)];
    if (y != 1 && y != -1) {
      throw DomainError("label " + std::to_string(y) + " at row " + std::to_string(n) +
                        " is not -1 or +1");
    }
    effective_.col(n) = static_cast<double>(y) * points_.row(n).transpose();
  }
}

namespace {

Dataset from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> labels) {
  if (rows.empty()) throw ParseError("dataset has no samples");
  const std::size_t d = rows.front().size();
  if (d == 0) throw ParseError("dataset points have dimension 0");
  Matrix points(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (rows[n].size() != d) {
      throw ParseError("row " + std::to_string(n) + " has dimension " +
                       std::to_string(rows[n].size()) + ", expected " + std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = rows[n][i];
    }
  }
  try {
    return Dataset(std::move(points), std::move(labels));
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

int parse_label(double v, std::size_t row) {
  if (v == 1.0) return 1;
  if (v == -1.0) return -1;
  throw ParseError("label at row " + std::to_string(row) + " must be -1 or +1");
}

}  // namespace

Dataset parse_dataset_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("points") || !doc.contains("labels")) {
    throw ParseError("dataset JSON must be an object with \"points\" and \"labels\"");
  }
  const auto& jp = doc["points"];
  const auto& jl = doc["labels"];
  if (!jp.is_array() || !jl.is_array()) throw ParseError("\"points\" and \"labels\" must be arrays");
  if (jp.size() != jl.size()) throw ParseError("\"points\" and \"labels\" differ in length");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(jp.size());
  for (std::size_t n = 0; n < jp.size(); ++n) {
    if (!jp[n].is_array()) throw ParseError("point " + std::to_string(n) + " is not an array");
    std::vector<double> row;
    for (const auto& v : jp[n]) {
      if (!v.is_number()) throw ParseError("non-numeric coordinate in point " + std::to_string(n));
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
    if (!jl[n].is_number()) throw ParseError("non-numeric label at row " + std::to_string(n));
    labels.push_back(parse_label(jl[n].get<double>(), n));
  }
  return from_rows(rows, std::move(labels));
}

Dataset parse_dataset_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') continue;
    std::vector<double> fields;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (numeric && std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        numeric = cell.find_first_not_of(" \t", used) == std::string::npos;
        fields.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      // A non-numeric first line is a header.
      if (lineno == 1 && rows.empty()) continue;
      throw ParseError("line " + std::to_string(lineno) + ": cannot parse '" + cell + "'");
    }
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(lineno) + ": need at least one coordinate and a label");
    }
    labels.push_back(parse_label(fields.back(), rows.size()));
    fields.pop_back();
    rows.push_back(std::move(fields));
  }
  return from_rows(rows, std::move(labels));
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return format == DataFormat::csv ? parse_dataset_csv(buf.str()) : parse_dataset_json(buf.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return load_dataset(path, ext == ".csv" ? DataFormat::csv : DataFormat::json);
}

DataStats compute_stats(const Dataset& data) {
  DataStats stats;
  const Matrix& z = data.effective();
  stats.xbar_per_coord = z.cwiseAbs().rowwise().sum();
  stats.xbar = stats.xbar_per_coord.maxCoeff();
  stats.xmax = z.colwise().norm().maxCoeff();
  try {
    const MarginSolution sol = l2_max_margin(data);
    const double norm = sol.w.norm();
    stats.separable = norm > 0.0;
    stats.gamma2 = 1.0 / norm;
    stats.witness = sol.w / norm;
  } catch (const NonSeparableError&) {
    stats.separable = false;
    stats.gamma2 = 0.0;
  }
  return stats;
}

Dataset uniform_random_dataset(std::size_t n, std::size_t d, double lo, double hi,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(lo, hi);
  Matrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) points(r, c) = coord(rng);
  }
  return Dataset(std::move(points), std::vector<int>(n, 1));
}

Dataset sparse_random_dataset(std::size_t n, std::size_t d, double noise_hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, noise_hi);
  Matrix points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    points(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < points.cols(); ++c) points(r, c) = noise(rng);
  }
  return Dataset(std::move(points), std::vector<int>(n, 1));
}

}  // namespace diagnet

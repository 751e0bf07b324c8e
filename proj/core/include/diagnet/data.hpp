#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace diagnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class DataFormat { json, csv };

/// A labelled binary classification dataset.
///
/// Labels are absorbed on construction: downstream code only ever sees the
/// effective points z_n = y_n * x_n, stored as the columns of a d x N matrix.
/// Raw points are kept for kernels and export. Instances are immutable.
class Dataset {
 public:
  /// Validates and builds a dataset. `points` is N x d, one sample per row.
  /// Throws DomainError on empty input, non-finite entries or labels outside {-1, +1}.
  Dataset(Matrix points, std::vector<int> labels);

  std::size_t num_samples() const { return labels_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }

  const Matrix& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }
  /// d x N matrix whose n-th column is y_n * x_n.
  const Matrix& effective() const { return effective_; }
  Eigen::Ref<const Vector> effective_point(std::size_t n) const {
    return effective_.col(static_cast<Eigen::Index>(n));
  }

 private:
  Matrix points_;
  std::vector<int> labels_;
  Matrix effective_;
};

/// Fixed geometric statistics of a dataset.
struct DataStats {
  double gamma2 = 0.0;   // max l2 margin of a unit vector, 0 if not separable
  Vector xbar_per_coord;  // sum_n |x_{n,i}|
  double xbar = 0.0;
  double xmax = 0.0;      // max_n ||x_n||_2
  bool separable = false;
  Vector witness;         // unit vector achieving gamma2 (empty if not separable)
};

Dataset parse_dataset_json(std::string_view text);
Dataset parse_dataset_csv(std::string_view text);

/// Loads a dataset file. JSON: {"points": [[...], ...], "labels": [...]};
/// CSV: one row per sample, last column is the label. Throws ParseError.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
/// Format chosen from the file extension (.csv, otherwise JSON).
Dataset load_dataset(const std::filesystem::path& path);

DataStats compute_stats(const Dataset& data);

/// N points with i.i.d. U(lo, hi) coordinates, all labels +1.
Dataset uniform_random_dataset(std::size_t n, std::size_t d, double lo, double hi,
                               std::uint64_t seed);

/// N points whose first coordinate is 1 and the rest U(0, noise_hi), labels +1.
Dataset sparse_random_dataset(std::size_t n, std::size_t d, double noise_hi,
                              std::uint64_t seed);

}  // namespace diagnet

#pragma once

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls the solvers under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "diagnet/data.hpp"

#ifndef DIAGNET_DATA_DIR
#error "DIAGNET_DATA_DIR must point at the bundled datasets"
#endif

namespace diagnet::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DIAGNET_DATA_DIR) / name;
}

inline Dataset bundled(const std::string& name) { return load_dataset(data_path(name)); }

/// Every bundled dataset with d <= 3 and N <= 4.
inline std::vector<std::string> small_datasets() {
  return {"single_point.json",  "single_point_negative.json", "symmetric_pair.json", "planar_four.json",
          "mixed_four.json",    "unique_l1.json",             "degenerate_l1.json",  "support_switch.json",
          "depth3_a.json",      "depth3_b.json"};
}

inline double min_margin(const Eigen::MatrixXd& z, const Eigen::VectorXd& u) {
  return (z.transpose() * u).minCoeff();
}

struct GridOptimum {
  Eigen::VectorXd direction;  // unit vector
  double margin = -std::numeric_limits<double>::infinity();
};

/// Maximizer of a quasi-concave function on [lo, hi] by golden sections.
template <typename F>
double golden_max(const F& f, double lo, double hi, int iterations = 120) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - r * (hi - lo);
  double b = lo + r * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  for (int i = 0; i < iterations; ++i) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + r * (hi - lo);
      fb = f(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - r * (hi - lo);
      fa = f(a);
    }
  }
  return 0.5 * (lo + hi);
}

/// Brute force max_{|u|=1} min_n z_n.u over a grid of `step_deg` in every
/// angle (d = 1, 2, 3), refined around the best grid point. In gnomonic
/// coordinates v = c + a t1 + b t2 the objective min_n z_n.v / |v| is
/// quasi-concave (affine-min over a norm), so nested golden sections over a
/// window of ten grid steps converge to the exact maximizer.
inline GridOptimum sphere_grid_l2(const Eigen::MatrixXd& z, double step_deg = 0.5) {
  const auto d = z.rows();
  const double step = step_deg * std::numbers::pi / 180.0;
  GridOptimum best;
  const auto consider = [&](const Eigen::VectorXd& u) {
    const double m = min_margin(z, u);
    if (m > best.margin) {
      best.margin = m;
      best.direction = u;
    }
  };
  if (d == 1) {
    consider(Eigen::VectorXd::Constant(1, 1.0));
    consider(Eigen::VectorXd::Constant(1, -1.0));
    return best;
  }
  if (d == 2) {
    for (double phi = 0.0; phi < 2.0 * std::numbers::pi; phi += step) {
      consider((Eigen::VectorXd(2) << std::cos(phi), std::sin(phi)).finished());
    }
  } else {
    for (double theta = 0.0; theta <= std::numbers::pi + 1e-12; theta += step) {
      for (double phi = 0.0; phi < 2.0 * std::numbers::pi; phi += step) {
        consider((Eigen::VectorXd(3) << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                  std::cos(theta))
                     .finished());
      }
    }
  }
  if (!(best.margin > 0.0)) return best;  // quasi-concavity needs a positive level

  const Eigen::VectorXd center = best.direction;
  Eigen::MatrixXd seed = Eigen::MatrixXd::Identity(d, d);
  seed.col(0) = center;
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(seed).householderQ();
  const Eigen::MatrixXd tangent = q.rightCols(d - 1);
  const double window = std::tan(10.0 * step);
  const auto value = [&](double a, double b) {
    Eigen::VectorXd v = center + a * tangent.col(0);
    if (d == 3) v += b * tangent.col(1);
    return min_margin(z, v) / v.norm();
  };
  double a_opt = 0.0;
  double b_opt = 0.0;
  if (d == 2) {
    a_opt = golden_max([&](double a) { return value(a, 0.0); }, -window, window);
  } else {
    const auto inner = [&](double a) { return golden_max([&](double b) { return value(a, b); }, -window, window); };
    a_opt = golden_max([&](double a) { return value(a, inner(a)); }, -window, window);
    b_opt = inner(a_opt);
  }
  Eigen::VectorXd v = center + a_opt * tangent.col(0);
  if (d == 3) v += b_opt * tangent.col(1);
  consider(v.normalized());
  return best;
}

/// l2 max margin by active-set enumeration: for every nonempty subset S of
/// samples, the minimum-norm w with z_n.w = 1 on S; the shortest feasible one
/// wins.
inline Eigen::VectorXd enumerate_l2(const Eigen::MatrixXd& z) {
  const auto n = z.cols();
  Eigen::VectorXd best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (long mask = 1; mask < (1L << n); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask & (1L << j)) idx.push_back(j);
    }
    Eigen::MatrixXd zs(z.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) zs.col(static_cast<Eigen::Index>(j)) = z.col(idx[j]);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(zs.cols());
    const Eigen::VectorXd w = zs.transpose().completeOrthogonalDecomposition().solve(ones);
    if ((zs.transpose() * w - ones).cwiseAbs().maxCoeff() > 1e-9) continue;
    if (min_margin(z, w) < 1.0 - 1e-9) continue;
    if (w.norm() < best_norm) {
      best_norm = w.norm();
      best = w;
    }
  }
  return best;
}

struct VertexEnumeration {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> optimal_w;  // distinct w over optimal vertices
  int feasible_vertices = 0;
};

/// min ||w||_1 s.t. z_n.w >= 1 by enumerating every basic feasible solution of
/// Z^T (w+ - w-) - s = 1, (w+, w-, s) >= 0.
inline VertexEnumeration enumerate_l1_vertices(const Eigen::MatrixXd& z, double tol = 1e-9) {
  const auto d = z.rows();
  const auto n = z.cols();
  const Eigen::Index cols = 2 * d + n;
  Eigen::MatrixXd a(n, cols);
  a << z.transpose(), -z.transpose(), -Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(n);

  VertexEnumeration out;
  std::vector<Eigen::VectorXd> candidates;
  std::vector<double> objectives;
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(n));
  // Iterate over all n-subsets of the columns.
  std::vector<bool> chosen(static_cast<std::size_t>(cols), false);
  std::fill(chosen.end() - n, chosen.end(), true);
  do {
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (chosen[static_cast<std::size_t>(j)]) pick[static_cast<std::size_t>(c++)] = j;
    }
    Eigen::MatrixXd basis(n, n);
    for (Eigen::Index j = 0; j < n; ++j) basis.col(j) = a.col(pick[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.rank() < n) continue;
    const Eigen::VectorXd xb = lu.solve(b);
    if (xb.minCoeff() < -tol) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index j = 0; j < n; ++j) x[pick[static_cast<std::size_t>(j)]] = std::max(0.0, xb[j]);
    ++out.feasible_vertices;
    candidates.push_back(x.head(d) - x.segment(d, d));
    objectives.push_back(x.head(2 * d).sum());
  } while (std::next_permutation(chosen.begin(), chosen.end()));

  for (const double o : objectives) out.objective = std::min(out.objective, o);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (objectives[i] > out.objective + tol) continue;
    // Optimal vertices may repeat the same w (degenerate bases).
    const bool seen = std::any_of(out.optimal_w.begin(), out.optimal_w.end(), [&](const Eigen::VectorXd& w) {
      return (w - candidates[i]).cwiseAbs().maxCoeff() <= 1e-7;
    });
    if (!seen) out.optimal_w.push_back(candidates[i]);
  }
  return out;
}

inline double angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Central difference of a scalar function of a vector.
template <typename F>
Eigen::VectorXd central_gradient(const F& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace diagnet::testing

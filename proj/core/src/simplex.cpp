#include "simplex.hpp"

#include <cmath>
#include <limits>

namespace diagnet::detail {

namespace {

class Tableau {
 public:
  Tableau(const StandardFormLp& lp) : m_(lp.A.rows()), n_(lp.A.cols()) {
    t_.setZero(m_, n_ + m_ + 1);
    flipped_.assign(static_cast<std::size_t>(m_), false);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = lp.b[i] < 0.0 ? -1.0 : 1.0;
      flipped_[static_cast<std::size_t>(i)] = sign < 0.0;
      t_.row(i).head(n_) = sign * lp.A.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign * lp.b[i];
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    active_.assign(static_cast<std::size_t>(m_), true);
  }

  Eigen::Index rhs() const { return n_ + m_; }

  // Runs Bland-rule simplex on columns [0, ncols) with the given cost vector
  // (length n + m). Returns optimal / unbounded / iteration_limit.
  LpStatus optimize(const Eigen::VectorXd& cost, Eigen::Index ncols, double tol, int& pivots,
                    int max_pivots) {
    while (pivots < max_pivots) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        if (is_basic(j)) continue;
        if (reduced_cost(cost, j) < -tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return LpStatus::optimal;

      Eigen::Index leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!active_[static_cast<std::size_t>(i)]) continue;
        const double a = t_(i, entering);
        if (a <= tol) continue;
        const double ratio = t_(i, rhs()) / a;
        if (ratio < best_ratio - tol ||
            (std::abs(ratio - best_ratio) <= tol && leaving >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)])) {
          best_ratio = ratio;
          leaving = i;
        }
      }
      if (leaving < 0) return LpStatus::unbounded;
      pivot(leaving, entering);
      ++pivots;
    }
    return LpStatus::iteration_limit;
  }

  double reduced_cost(const Eigen::VectorXd& cost, Eigen::Index j) const {
    double r = cost[j];
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!active_[static_cast<std::size_t>(i)]) continue;
      r -= cost[basis_[static_cast<std::size_t>(i)]] * t_(i, j);
    }
    return r;
  }

  double objective(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!active_[static_cast<std::size_t>(i)]) continue;
      v += cost[basis_[static_cast<std::size_t>(i)]] * t_(i, rhs());
    }
    return v;
  }

  // Moves artificial columns out of the basis after phase one; rows that
  // cannot be pivoted are linearly dependent and are deactivated.
  void expel_artificials(double tol, int& pivots) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (!is_basic(j) && std::abs(t_(i, j)) > tol) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
        ++pivots;
      } else {
        active_[static_cast<std::size_t>(i)] = false;
      }
    }
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      if (active_[static_cast<std::size_t>(i)] && b < n_) x[b] = std::max(0.0, t_(i, rhs()));
    }
    return x;
  }

  Eigen::VectorXd duals(const StandardFormLp& lp) const {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (active_[static_cast<std::size_t>(i)]) rows.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd bt(k, k);
    Eigen::VectorXd cb(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index col = basis_[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
      cb[r] = lp.c[col];
      for (Eigen::Index s = 0; s < k; ++s) {
        const Eigen::Index row = rows[static_cast<std::size_t>(s)];
        const double sign = flipped_[static_cast<std::size_t>(row)] ? -1.0 : 1.0;
        bt(r, s) = sign * lp.A(row, col);
      }
    }
    const Eigen::VectorXd y_active = bt.fullPivLu().solve(cb);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
    for (Eigen::Index s = 0; s < k; ++s) {
      const Eigen::Index row = rows[static_cast<std::size_t>(s)];
      y[row] = flipped_[static_cast<std::size_t>(row)] ? -y_active[s] : y_active[s];
    }
    return y;
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }
  Eigen::Index num_structural() const { return n_; }
  Eigen::Index num_rows() const { return m_; }

 private:
  bool is_basic(Eigen::Index j) const {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (active_[static_cast<std::size_t>(i)] && basis_[static_cast<std::size_t>(i)] == j) return true;
    }
    return false;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> flipped_;
  std::vector<bool> active_;
};

}  // namespace

LpResult solve_lp(const StandardFormLp& lp, double tol, int max_pivots) {
  LpResult result;
  Tableau tab(lp);
  const Eigen::Index n = lp.A.cols();
  const Eigen::Index m = lp.A.rows();

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  LpStatus st = tab.optimize(phase1, n + m, tol, result.pivots, max_pivots);
  if (st == LpStatus::iteration_limit) {
    result.status = st;
    return result;
  }
  const double scale = std::max(1.0, lp.b.cwiseAbs().maxCoeff());
  if (tab.objective(phase1) > 1e3 * tol * scale) {
    result.status = LpStatus::infeasible;
    return result;
  }
  tab.expel_artificials(tol, result.pivots);

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = lp.c;
  st = tab.optimize(phase2, n, tol, result.pivots, max_pivots);
  result.status = st;
  if (st != LpStatus::optimal) return result;

  result.x = tab.solution();
  result.objective = lp.c.dot(result.x);
  result.duals = tab.duals(lp);
  result.basis = tab.basis();
  return result;
}

}  // namespace diagnet::detail

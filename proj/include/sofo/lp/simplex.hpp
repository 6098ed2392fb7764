#pragma once

// Dense-tableau primal simplex for bounded variables.
//
// Works on  A x - s = 0  with l <= x <= u for structurals and row bounds on
// the logicals s. Phase 1 adds one artificial per row whose initial logical
// value is out of range and minimises their sum. Entering and leaving
// variables follow Bland's smallest-index rule, which cannot cycle.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sofo/lp/linear_program.hpp"

namespace sofo::lp {

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProgram& lp, const SolveOptions& opt)
      : m_(lp.num_rows()), n_(lp.num_cols()), opt_(opt) {
    total_ = n_ + 2 * m_;
    tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
    lower_.assign(static_cast<std::size_t>(total_), 0.0);
    upper_.assign(static_cast<std::size_t>(total_), 0.0);
    cost_.assign(static_cast<std::size_t>(total_), 0.0);
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    basic_.assign(static_cast<std::size_t>(m_), -1);
    is_basic_.assign(static_cast<std::size_t>(total_), -1);

    for (int j = 0; j < n_; ++j) {
      lower_[uj(j)] = lp.col_lower[uj(j)];
      upper_[uj(j)] = lp.col_upper[uj(j)];
      cost_[uj(j)] = lp.objective[uj(j)];
      x_[uj(j)] = initial_value(lower_[uj(j)], upper_[uj(j)]);
    }
    for (const auto& e : lp.entries) at(e.row, e.col) += e.value;

    std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) activity[ui(i)] += at(i, j) * x_[uj(j)];

    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      const int a = n_ + m_ + i;
      lower_[uj(s)] = lp.row_lower[ui(i)];
      upper_[uj(s)] = lp.row_upper[ui(i)];
      if (std::isfinite(lower_[uj(s)])) scale_ = std::max(scale_, std::abs(lower_[uj(s)]));
      if (std::isfinite(upper_[uj(s)])) scale_ = std::max(scale_, std::abs(upper_[uj(s)]));
      at(i, s) = -1.0;
      const double v = activity[ui(i)];
      if (v >= lower_[uj(s)] && v <= upper_[uj(s)]) {
        x_[uj(s)] = v;
        set_basic(i, s);
        lower_[uj(a)] = upper_[uj(a)] = 0.0;
      } else {
        const double bound = v < lower_[uj(s)] ? lower_[uj(s)] : upper_[uj(s)];
        x_[uj(s)] = bound;
        const double sigma = bound > v ? 1.0 : -1.0;
        at(i, a) = sigma;
        x_[uj(a)] = std::abs(bound - v);
        lower_[uj(a)] = 0.0;
        upper_[uj(a)] = kInf;
        set_basic(i, a);
        ++artificials_;
      }
    }
    // Make the tableau B^-1 [A -I Sigma]: each basic column is +-1 on its row.
    for (int i = 0; i < m_; ++i) {
      const double piv = at(i, basic_[ui(i)]);
      if (piv != 1.0)
        for (int j = 0; j < total_; ++j) at(i, j) /= piv;
    }
  }

  LPSolution run() {
    LPSolution sol;
    if (artificials_ > 0) {
      std::vector<double> phase1(static_cast<std::size_t>(total_), 0.0);
      for (int i = 0; i < m_; ++i) {
        const int a = n_ + m_ + i;
        if (upper_[uj(a)] > 0.0) phase1[uj(a)] = 1.0;
      }
      const Status st = iterate(phase1);
      if (st == Status::iteration_limit) return finish(sol, st);
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) infeas += x_[uj(n_ + m_ + i)];
      if (infeas > 100.0 * opt_.tolerance * std::max(1.0, scale_)) return finish(sol, Status::infeasible);
      for (int i = 0; i < m_; ++i) {
        const int a = n_ + m_ + i;
        lower_[uj(a)] = upper_[uj(a)] = 0.0;
        if (is_basic_[uj(a)] < 0) x_[uj(a)] = 0.0;
      }
    }
    return finish(sol, iterate(cost_));
  }

 private:
  static std::size_t ui(int i) { return static_cast<std::size_t>(i); }
  static std::size_t uj(int j) { return static_cast<std::size_t>(j); }

  double& at(int i, int j) { return tab_[ui(i) * ui(total_) + uj(j)]; }
  double at(int i, int j) const { return tab_[ui(i) * ui(total_) + uj(j)]; }

  static double initial_value(double lo, double up) {
    if (std::isfinite(lo) && std::isfinite(up)) return std::abs(lo) <= std::abs(up) ? lo : up;
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(up)) return up;
    return 0.0;
  }

  void set_basic(int row, int var) {
    if (basic_[ui(row)] >= 0) is_basic_[uj(basic_[ui(row)])] = -1;
    basic_[ui(row)] = var;
    is_basic_[uj(var)] = row;
  }

  // Basic values from nonbasic values: B^-1 [A -I Sigma] x = 0.
  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int j = 0; j < total_; ++j)
        if (is_basic_[uj(j)] < 0 && x_[uj(j)] != 0.0) v -= at(i, j) * x_[uj(j)];
      x_[uj(basic_[ui(i)])] = v;
    }
  }

  Status iterate(const std::vector<double>& c) {
    const double tol = opt_.tolerance;
    const double piv_tol = 1e-9;
    // reduced costs d = c - c_B^T T
    std::vector<double> d(c);
    for (int i = 0; i < m_; ++i) {
      const double cb = c[uj(basic_[ui(i)])];
      if (cb == 0.0) continue;
      for (int j = 0; j < total_; ++j) d[uj(j)] -= cb * at(i, j);
    }
    std::vector<double> col(static_cast<std::size_t>(m_));
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
      // Bland: smallest index that improves.
      int enter = -1;
      double dir = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (is_basic_[uj(j)] >= 0) continue;
        const double dj = d[uj(j)];
        if (dj < -tol && x_[uj(j)] < upper_[uj(j)] - tol) {
          enter = j;
          dir = 1.0;
          break;
        }
        if (dj > tol && x_[uj(j)] > lower_[uj(j)] + tol) {
          enter = j;
          dir = -1.0;
          break;
        }
      }
      if (enter < 0) return Status::optimal;

      for (int i = 0; i < m_; ++i) col[ui(i)] = at(i, enter);
      // Basic i moves by -col[i] * dir * theta.
      double theta = upper_[uj(enter)] - lower_[uj(enter)];
      int leave_row = -1;
      int leave_var = total_;
      for (int i = 0; i < m_; ++i) {
        const double rate = -col[ui(i)] * dir;
        if (std::abs(col[ui(i)]) <= piv_tol) continue;
        const int b = basic_[ui(i)];
        double limit;
        if (rate < 0.0) {
          if (!std::isfinite(lower_[uj(b)])) continue;
          limit = std::max(0.0, x_[uj(b)] - lower_[uj(b)]) / -rate;
        } else {
          if (!std::isfinite(upper_[uj(b)])) continue;
          limit = std::max(0.0, upper_[uj(b)] - x_[uj(b)]) / rate;
        }
        // ties go to the smallest basic index
        if (limit < theta - 1e-12) {
          theta = limit;
          leave_row = i;
          leave_var = b;
        } else if (limit <= theta + 1e-12 && (leave_row < 0 || b < leave_var)) {
          theta = std::min(theta, limit);
          leave_row = i;
          leave_var = b;
        }
      }
      if (!std::isfinite(theta)) return Status::unbounded;
      ++iterations_;

      // Move.
      x_[uj(enter)] += dir * theta;
      for (int i = 0; i < m_; ++i) x_[uj(basic_[ui(i)])] -= col[ui(i)] * dir * theta;

      if (leave_row < 0) {
        // bound flip
        x_[uj(enter)] = dir > 0 ? upper_[uj(enter)] : lower_[uj(enter)];
        continue;
      }
      const int lv = basic_[ui(leave_row)];
      const double rate = -col[ui(leave_row)] * dir;
      x_[uj(lv)] = rate < 0.0 ? lower_[uj(lv)] : upper_[uj(lv)];
      pivot(leave_row, enter, d);
      if (iterations_ % 64 == 0) recompute_basics();
    }
  }

  void pivot(int r, int q, std::vector<double>& d) {
    const double p = at(r, q);
    double* rowr = &tab_[ui(r) * ui(total_)];
    for (int j = 0; j < total_; ++j) rowr[j] /= p;
    rowr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* rowi = &tab_[ui(i) * ui(total_)];
      const double f = rowi[q];
      if (f == 0.0) continue;
      for (int j = 0; j < total_; ++j) rowi[j] -= f * rowr[j];
      rowi[q] = 0.0;
    }
    const double f = d[uj(q)];
    if (f != 0.0) {
      for (int j = 0; j < total_; ++j) d[uj(j)] -= f * rowr[j];
      d[uj(q)] = 0.0;
    }
    set_basic(r, q);
  }

  LPSolution& finish(LPSolution& sol, Status st) {
    recompute_basics();
    sol.status = st;
    sol.iterations = iterations_;
    sol.primal.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j)
      sol.primal[uj(j)] = std::clamp(sol.primal[uj(j)], lower_[uj(j)], upper_[uj(j)]);
    sol.objective = 0.0;
    for (int j = 0; j < n_; ++j) sol.objective += cost_[uj(j)] * sol.primal[uj(j)];
    return sol;
  }

  int m_;
  int n_;
  int total_ = 0;
  int artificials_ = 0;
  long iterations_ = 0;
  double scale_ = 1.0;
  SolveOptions opt_;
  std::vector<double> tab_;
  std::vector<double> lower_, upper_, cost_, x_;
  std::vector<int> basic_;
  std::vector<int> is_basic_;
};

}  // namespace detail

/// Solves the program as given, without presolve.
inline LPSolution simplex_solve(const LinearProgram& lp, const SolveOptions& opt = {}) {
  detail::BoundedSimplex s(lp, opt);
  return s.run();
}

}  // namespace sofo::lp

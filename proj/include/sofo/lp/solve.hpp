#pragma once

// solve_lp: presolve, bounded simplex, postsolve.
//
// Presolve performs two exact reductions:
//   * a column that appears in a single equality row is substituted out; the
//     row becomes a ranged row over the remaining columns and the column's
//     cost moves onto them (plus a constant);
//   * rows with proportional coefficient vectors are merged by intersecting
//     their bounds.
// Scenario-indexed recourse columns of the stochastic dispatch model reduce
// this way to one ranged balance row per timestamp.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "sofo/lp/linear_program.hpp"
#include "sofo/lp/simplex.hpp"

namespace sofo::lp {

namespace detail {

struct Substitution {
  int col = 0;
  double coef = 0.0;  // coefficient of col in its row
  double rhs = 0.0;
  std::vector<std::pair<int, double>> others;
};

struct Presolved {
  bool infeasible = false;
  LinearProgram reduced;
  std::vector<int> kept_cols;  // reduced column -> original column
  std::vector<Substitution> substitutions;
};

inline Presolved presolve(const LinearProgram& lp, double tol) {
  Presolved out;
  const int m = lp.num_rows();
  const int n = lp.num_cols();

  // Row-wise entries with duplicates summed, ordered by column.
  std::vector<std::map<int, double>> rows(static_cast<std::size_t>(m));
  for (const auto& e : lp.entries) rows[static_cast<std::size_t>(e.row)][e.col] += e.value;
  for (auto& r : rows)
    for (auto it = r.begin(); it != r.end();) it = it->second == 0.0 ? r.erase(it) : std::next(it);

  std::vector<int> col_count(static_cast<std::size_t>(n), 0);
  std::vector<int> col_row(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < m; ++i)
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) {
      ++col_count[static_cast<std::size_t>(j)];
      col_row[static_cast<std::size_t>(j)] = i;
    }

  std::vector<double> cost = lp.objective;
  std::vector<double> rlo = lp.row_lower;
  std::vector<double> rup = lp.row_upper;
  std::vector<bool> col_removed(static_cast<std::size_t>(n), false);
  std::vector<bool> row_used(static_cast<std::size_t>(m), false);
  std::vector<bool> row_removed(static_cast<std::size_t>(m), false);

  for (int j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    if (col_count[uj] != 1) continue;
    const int i = col_row[uj];
    const auto ui = static_cast<std::size_t>(i);
    if (row_used[ui] || rlo[ui] != rup[ui] || !std::isfinite(rlo[ui])) continue;
    auto& row = rows[ui];
    const double a = row.at(j);
    const double b = rlo[ui];
    Substitution sub{j, a, b, {}};
    for (const auto& [k, v] : row)
      if (k != j) sub.others.emplace_back(k, v);
    // a x_j = b - r, with r the activity of the remaining columns
    const double l = lp.col_lower[uj];
    const double u = lp.col_upper[uj];
    double lo = a > 0 ? b - a * u : b - a * l;
    double up = a > 0 ? b - a * l : b - a * u;
    if (std::isnan(lo)) lo = -kInf;
    if (std::isnan(up)) up = kInf;
    rlo[ui] = lo;
    rup[ui] = up;
    for (const auto& [k, v] : sub.others) cost[static_cast<std::size_t>(k)] -= cost[uj] * v / a;
    row.erase(j);
    row_used[ui] = true;
    col_removed[uj] = true;
    out.substitutions.push_back(std::move(sub));
    if (row.empty()) {
      if (lo > tol * (1.0 + std::abs(lo)) || up < -tol * (1.0 + std::abs(up))) {
        out.infeasible = true;
        return out;
      }
      row_removed[ui] = true;
    }
  }

  // Merge proportional rows. Each row is scaled so its first coefficient is 1.
  std::map<std::vector<std::pair<int, std::uint64_t>>, int> seen;
  for (int i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (row_removed[ui]) continue;
    auto& row = rows[ui];
    if (row.empty()) {
      if (rlo[ui] > tol || rup[ui] < -tol) {
        out.infeasible = true;
        return out;
      }
      row_removed[ui] = true;
      continue;
    }
    const double f = row.begin()->second;
    if (f != 1.0) {
      for (auto& [k, v] : row) v /= f;
      double lo = rlo[ui] / f;
      double up = rup[ui] / f;
      if (f < 0) std::swap(lo, up);
      rlo[ui] = lo;
      rup[ui] = up;
    }
    std::vector<std::pair<int, std::uint64_t>> key;
    key.reserve(row.size());
    for (const auto& [k, v] : row) key.emplace_back(k, std::bit_cast<std::uint64_t>(v));
    auto [it, inserted] = seen.emplace(std::move(key), i);
    if (inserted) continue;
    const auto keep = static_cast<std::size_t>(it->second);
    rlo[keep] = std::max(rlo[keep], rlo[ui]);
    rup[keep] = std::min(rup[keep], rup[ui]);
    if (rlo[keep] > rup[keep]) {
      if (rlo[keep] - rup[keep] > tol * (1.0 + std::abs(rlo[keep]))) {
        out.infeasible = true;
        return out;
      }
      rup[keep] = rlo[keep];
    }
    row_removed[ui] = true;
  }

  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    if (col_removed[uj]) continue;
    new_index[uj] = out.reduced.add_column(lp.names[uj], lp.col_lower[uj], lp.col_upper[uj], cost[uj]);
    out.kept_cols.push_back(j);
  }
  for (int i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (row_removed[ui]) continue;
    const int r = out.reduced.add_row(rlo[ui], rup[ui]);
    for (const auto& [k, v] : rows[ui]) out.reduced.add_entry(r, new_index[static_cast<std::size_t>(k)], v);
  }
  return out;
}

}  // namespace detail

/// Solves the program. Infeasibility, unboundedness and the iteration limit
/// are reported through the status. Throws ContractError on a malformed LP.
inline LPSolution solve_lp(const LinearProgram& lp, const SolveOptions& opt = {}) {
  if (auto problems = lp.validate(); !problems.empty()) throw ContractError("invalid LP: " + problems.front());
  if (!opt.presolve) {
    auto sol = simplex_solve(lp, opt);
    sol.objective = lp.objective_value(sol.primal);
    return sol;
  }
  auto pre = detail::presolve(lp, opt.tolerance);
  LPSolution sol;
  if (pre.infeasible) {
    sol.status = Status::infeasible;
    sol.primal.assign(static_cast<std::size_t>(lp.num_cols()), 0.0);
    return sol;
  }
  auto inner = simplex_solve(pre.reduced, opt);
  sol.status = inner.status;
  sol.iterations = inner.iterations;
  sol.primal.assign(static_cast<std::size_t>(lp.num_cols()), 0.0);
  for (std::size_t k = 0; k < pre.kept_cols.size(); ++k)
    sol.primal[static_cast<std::size_t>(pre.kept_cols[k])] = inner.primal[k];
  // Later substitutions never reference earlier substituted columns.
  for (auto it = pre.substitutions.rbegin(); it != pre.substitutions.rend(); ++it) {
    double r = 0.0;
    for (const auto& [k, v] : it->others) r += v * sol.primal[static_cast<std::size_t>(k)];
    const auto uj = static_cast<std::size_t>(it->col);
    sol.primal[uj] = std::clamp((it->rhs - r) / it->coef, lp.col_lower[uj], lp.col_upper[uj]);
  }
  sol.objective = lp.objective_value(sol.primal);
  return sol;
}

}  // namespace sofo::lp

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sofo/errors.hpp"

namespace sofo::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// What an LP column represents in the dispatch model. `device` and
/// `scenario` are -1 when not applicable.
struct ColumnName {
  std::string quantity;
  int device = -1;
  int t = -1;
  int scenario = -1;

  std::string str() const {
    std::string s = quantity;
    if (device >= 0) s += "_d" + std::to_string(device);
    if (t >= 0) s += "_t" + std::to_string(t);
    if (scenario >= 0) s += "_n" + std::to_string(scenario);
    return s;
  }
  bool operator==(const ColumnName&) const = default;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// min c'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
/// A is stored as (row, col, value) triplets; duplicates are summed.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<ColumnName> names;
  std::vector<double> row_lower;
  std::vector<double> row_upper;
  std::vector<Triplet> entries;

  int num_cols() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(row_lower.size()); }

  int add_column(ColumnName name, double lower, double upper, double cost) {
    objective.push_back(cost);
    col_lower.push_back(lower);
    col_upper.push_back(upper);
    names.push_back(std::move(name));
    return num_cols() - 1;
  }

  int add_row(double lower, double upper) {
    row_lower.push_back(lower);
    row_upper.push_back(upper);
    return num_rows() - 1;
  }

  void add_entry(int row, int col, double value) {
    if (value != 0.0) entries.push_back({row, col, value});
  }

  /// Column index for a name, or -1.
  int find(const ColumnName& name) const {
    for (int j = 0; j < num_cols(); ++j)
      if (names[static_cast<std::size_t>(j)] == name) return j;
    return -1;
  }

  /// Structural problems; empty iff the program is well formed.
  std::vector<std::string> validate() const {
    std::vector<std::string> out;
    const auto n = objective.size();
    if (col_lower.size() != n || col_upper.size() != n || names.size() != n)
      out.push_back("column arrays differ in length");
    if (row_lower.size() != row_upper.size()) out.push_back("row bound arrays differ in length");
    for (std::size_t j = 0; j < std::min(n, std::min(col_lower.size(), col_upper.size())); ++j) {
      if (std::isnan(col_lower[j]) || std::isnan(col_upper[j]) || col_lower[j] > col_upper[j])
        out.push_back("column " + std::to_string(j) + " has lower > upper");
      if (!std::isfinite(objective[j])) out.push_back("column " + std::to_string(j) + " has non-finite cost");
    }
    for (std::size_t i = 0; i < std::min(row_lower.size(), row_upper.size()); ++i)
      if (std::isnan(row_lower[i]) || std::isnan(row_upper[i]) || row_lower[i] > row_upper[i])
        out.push_back("row " + std::to_string(i) + " has lower > upper");
    for (const auto& e : entries) {
      if (e.row < 0 || e.row >= num_rows() || e.col < 0 || e.col >= num_cols())
        out.push_back("entry outside matrix dimensions");
      else if (!std::isfinite(e.value))
        out.push_back("non-finite matrix entry");
    }
    std::vector<std::string> seen;
    seen.reserve(names.size());
    for (const auto& nm : names) seen.push_back(nm.str());
    std::sort(seen.begin(), seen.end());
    for (std::size_t j = 1; j < seen.size(); ++j)
      if (seen[j] == seen[j - 1]) out.push_back("column name '" + seen[j] + "' used twice");
    return out;
  }

  /// A x for the given column values.
  std::vector<double> row_activity(const std::vector<double>& x) const {
    std::vector<double> r(static_cast<std::size_t>(num_rows()), 0.0);
    for (const auto& e : entries) r[static_cast<std::size_t>(e.row)] += e.value * x[static_cast<std::size_t>(e.col)];
    return r;
  }

  double objective_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
    return v;
  }

  /// Largest bound violation of x over rows and columns.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      worst = std::max({worst, col_lower[j] - x[j], x[j] - col_upper[j]});
    const auto r = row_activity(x);
    for (std::size_t i = 0; i < r.size(); ++i)
      worst = std::max({worst, row_lower[i] - r[i], r[i] - row_upper[i]});
    return worst;
  }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "?";
}

struct LPSolution {
  Status status = Status::infeasible;
  std::vector<double> primal;
  double objective = 0.0;
  long iterations = 0;
};

struct SolveOptions {
  long max_iterations = 200000;
  double tolerance = 1e-9;
  bool presolve = true;
};

}  // namespace sofo::lp

#pragma once

// Linear programs for the dispatch problem.
//
// Deterministic model over T steps with columns P_grid,t, P_g,t, P+_s,t,
// P-_s,t, E_s,t:
//   min  sum_t p_t P_grid,t
//   P_grid,t >= 0
//   P_min_g,t <= P_g,t <= P_max_g,t
//   0 <= P+_s,t <= P+max,  0 <= P-_s,t <= P-max
//   E_min <= E_s,t <= E_max,  E_s,t = E_s,t-1 + dt (P+_s,t - P-_s,t),  E_s,-1 = e_initial
//   P_grid,t + sum_g P_g,t + sum_s P-_s,t = sum_s P+_s,t + sum_u L_u,t
// The charge/discharge complementarity is left out and restored by
// extract_plan.
//
// The stochastic model keeps generation and storage decisions shared across
// scenarios and gives each scenario its own grid draw P^n_grid,t, priced at
// (1/N) p^n_t and balancing that scenario's loads.

#include <algorithm>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/lp/linear_program.hpp"
#include "sofo/lp/solve.hpp"
#include "sofo/scenario.hpp"

namespace sofo::dispatch {

using lp::ColumnName;
using lp::kInf;
using lp::LinearProgram;
using lp::LPSolution;

namespace detail {

struct StorageColumns {
  std::vector<std::vector<int>> charge, discharge, soc;  // [s][t]
};

inline void check_forecast(const ProblemInstance& inst, const PointForecast& f) {
  const std::size_t T = inst.horizon();
  if (f.price.size() != T) throw ShapeError("price forecast length != horizon " + std::to_string(T));
  if (f.solar.size() != inst.generators.size()) throw ShapeError("one solar forecast per generator required");
  if (f.load.size() != inst.buildings.size()) throw ShapeError("one load forecast per building required");
  for (const auto& s : f.solar)
    if (s.size() != T) throw ShapeError("solar forecast length != horizon " + std::to_string(T));
  for (const auto& s : f.load)
    if (s.size() != T) throw ShapeError("load forecast length != horizon " + std::to_string(T));
}

// Adds generation and storage columns for step t plus the SOC recursion rows.
inline void add_step_columns(LinearProgram& lp, const ProblemInstance& inst, std::size_t t,
                             const std::vector<double>& gen_upper, std::vector<std::vector<int>>& gen_cols,
                             StorageColumns& sc) {
  const int ti = static_cast<int>(t);
  for (std::size_t g = 0; g < inst.generators.size(); ++g) {
    const auto& dev = inst.generators[g];
    const double lo = dev.p_min[t];
    const double up = std::max(lo, std::min(gen_upper[g], dev.p_max_capacity));
    gen_cols[g][t] = lp.add_column({"p_gen", static_cast<int>(g), ti}, lo, up, 0.0);
  }
  for (std::size_t s = 0; s < inst.storages.size(); ++s) {
    const auto& dev = inst.storages[s];
    sc.charge[s][t] = lp.add_column({"p_charge", static_cast<int>(s), ti}, 0.0, dev.p_charge_max, 0.0);
    sc.discharge[s][t] = lp.add_column({"p_discharge", static_cast<int>(s), ti}, 0.0, dev.p_discharge_max, 0.0);
    sc.soc[s][t] = lp.add_column({"soc", static_cast<int>(s), ti}, dev.e_min, dev.e_max, 0.0);
  }
}

inline void add_soc_rows(LinearProgram& lp, const ProblemInstance& inst, const StorageColumns& sc) {
  const double dt = inst.grid.step_hours;
  for (std::size_t s = 0; s < inst.storages.size(); ++s) {
    for (std::size_t t = 0; t < inst.horizon(); ++t) {
      const double rhs = t == 0 ? inst.storages[s].e_initial : 0.0;
      const int r = lp.add_row(rhs, rhs);
      lp.add_entry(r, sc.soc[s][t], 1.0);
      if (t > 0) lp.add_entry(r, sc.soc[s][t - 1], -1.0);
      lp.add_entry(r, sc.charge[s][t], -dt);
      lp.add_entry(r, sc.discharge[s][t], dt);
    }
  }
}

// grid + sum gen + sum discharge - sum charge = load
inline void add_balance_row(LinearProgram& lp, int grid_col, double load, std::size_t t,
                            const std::vector<std::vector<int>>& gen_cols, const StorageColumns& sc) {
  const int r = lp.add_row(load, load);
  lp.add_entry(r, grid_col, 1.0);
  for (const auto& g : gen_cols) lp.add_entry(r, g[t], 1.0);
  for (std::size_t s = 0; s < sc.charge.size(); ++s) {
    lp.add_entry(r, sc.discharge[s][t], 1.0);
    lp.add_entry(r, sc.charge[s][t], -1.0);
  }
}

inline StorageColumns make_storage_columns(std::size_t S, std::size_t T) {
  StorageColumns sc;
  sc.charge.assign(S, std::vector<int>(T, -1));
  sc.discharge.assign(S, std::vector<int>(T, -1));
  sc.soc.assign(S, std::vector<int>(T, -1));
  return sc;
}

}  // namespace detail

/// LP over the instance horizon using point forecasts. Storage starts at
/// each device's e_initial.
inline LinearProgram build_deterministic(const ProblemInstance& inst, const PointForecast& f) {
  detail::check_forecast(inst, f);
  const std::size_t T = inst.horizon();
  LinearProgram lp;
  std::vector<std::vector<int>> gen_cols(inst.generators.size(), std::vector<int>(T, -1));
  auto sc = detail::make_storage_columns(inst.storages.size(), T);
  std::vector<int> grid_cols(T);
  for (std::size_t t = 0; t < T; ++t) {
    grid_cols[t] = lp.add_column({"p_grid", -1, static_cast<int>(t)}, 0.0, kInf, f.price[t]);
    std::vector<double> up(inst.generators.size());
    for (std::size_t g = 0; g < up.size(); ++g) up[g] = f.solar[g][t];
    detail::add_step_columns(lp, inst, t, up, gen_cols, sc);
  }
  for (std::size_t t = 0; t < T; ++t) {
    double load = 0.0;
    for (const auto& l : f.load) load += l[t];
    detail::add_balance_row(lp, grid_cols[t], load, t, gen_cols, sc);
  }
  detail::add_soc_rows(lp, inst, sc);
  return lp;
}

/// Two-stage LP: shared generation/storage decisions, per-scenario grid draw.
inline LinearProgram build_stochastic(const ProblemInstance& inst, const ScenarioSet& sc_set) {
  const std::size_t N = sc_set.n_scenarios;
  if (N == 0 || sc_set.price.size() != N) throw ContractError("scenario set is empty");
  const std::size_t T = inst.horizon();
  for (std::size_t n = 0; n < N; ++n) {
    PointForecast f{sc_set.solar[n], sc_set.load[n], sc_set.price[n]};
    detail::check_forecast(inst, f);
  }
  LinearProgram lp;
  std::vector<std::vector<int>> gen_cols(inst.generators.size(), std::vector<int>(T, -1));
  auto sc = detail::make_storage_columns(inst.storages.size(), T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> up(inst.generators.size(), kInf);
    for (std::size_t g = 0; g < up.size(); ++g)
      for (std::size_t n = 0; n < N; ++n) up[g] = std::min(up[g], sc_set.solar[n][g][t]);
    detail::add_step_columns(lp, inst, t, up, gen_cols, sc);
  }
  const double w = 1.0 / static_cast<double>(N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      const int g = lp.add_column({"p_grid", -1, static_cast<int>(t), static_cast<int>(n)}, 0.0, kInf,
                                  w * sc_set.price[n][t]);
      double load = 0.0;
      for (const auto& l : sc_set.load[n]) load += l[t];
      detail::add_balance_row(lp, g, load, t, gen_cols, sc);
    }
  }
  detail::add_soc_rows(lp, inst, sc);
  return lp;
}

/// Maps an optimal solution back to per-device series and restores
/// complementarity: each (P+, P-) pair is replaced by its net value and the
/// state of charge is recomputed from the repaired powers.
inline DispatchPlan extract_plan(const LPSolution& sol, const LinearProgram& lp, const ProblemInstance& inst) {
  if (sol.status != lp::Status::optimal)
    throw ContractError(std::string("cannot extract a plan from a ") + lp::to_string(sol.status) + " solution");
  const std::size_t T = inst.horizon();
  const std::size_t S = inst.storages.size();
  DispatchPlan plan;
  plan.p_grid.assign(T, 0.0);
  plan.p_gen.assign(inst.generators.size(), Series(T, 0.0));
  plan.p_charge.assign(S, Series(T, 0.0));
  plan.p_discharge.assign(S, Series(T, 0.0));
  plan.soc.assign(S, Series(T, 0.0));
  std::vector<int> grid_count(T, 0);
  for (int j = 0; j < lp.num_cols(); ++j) {
    const auto& nm = lp.names[static_cast<std::size_t>(j)];
    const double v = sol.primal[static_cast<std::size_t>(j)];
    const auto t = static_cast<std::size_t>(nm.t);
    const auto d = static_cast<std::size_t>(nm.device);
    if (nm.quantity == "p_grid") {
      plan.p_grid[t] += v;
      ++grid_count[t];
    } else if (nm.quantity == "p_gen") {
      plan.p_gen[d][t] = v;
    } else if (nm.quantity == "p_charge") {
      plan.p_charge[d][t] = v;
    } else if (nm.quantity == "p_discharge") {
      plan.p_discharge[d][t] = v;
    }
  }
  for (std::size_t t = 0; t < T; ++t)
    plan.p_grid[t] = grid_count[t] > 0 ? std::max(0.0, plan.p_grid[t] / grid_count[t]) : 0.0;
  const double dt = inst.grid.step_hours;
  for (std::size_t s = 0; s < S; ++s) {
    const auto& dev = inst.storages[s];
    double e = dev.e_initial;
    for (std::size_t t = 0; t < T; ++t) {
      const double net = plan.p_charge[s][t] - plan.p_discharge[s][t];
      plan.p_charge[s][t] = std::min(std::max(net, 0.0), dev.p_charge_max);
      plan.p_discharge[s][t] = std::min(std::max(-net, 0.0), dev.p_discharge_max);
      e = e + (plan.p_charge[s][t] - plan.p_discharge[s][t]) * dt;
      plan.soc[s][t] = e;
    }
  }
  return plan;
}

/// Builds, solves and extracts in one go. Returns the raw solution too so
/// callers can inspect the status.
struct PlanResult {
  LPSolution solution;
  DispatchPlan plan;
  bool ok = false;
};

inline PlanResult solve_and_extract(const LinearProgram& lp, const ProblemInstance& inst,
                                    const lp::SolveOptions& opt = {}) {
  PlanResult r;
  r.solution = lp::solve_lp(lp, opt);
  if (r.solution.status == lp::Status::optimal) {
    r.plan = extract_plan(r.solution, lp, inst);
    r.ok = true;
  }
  return r;
}

}  // namespace sofo::dispatch

#pragma once

// Episode runner and the controllers: SOFO, MPC / adaptive MPC, the
// rule-based schedule and the idle (no-storage) baseline.
//
// Every controller runs over the control window of a Split. Forecast-driven
// controllers replay a ForecastTrace; planning re-solves the LP every T_rl
// steps from the realised state of charge and executes the first T_rl steps
// of the newest plan.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "sofo/control/pipeline.hpp"
#include "sofo/dispatch.hpp"
#include "sofo/evaluate.hpp"
#include "sofo/scenario.hpp"
#include "sofo/serialize.hpp"
#include "sofo/simulator.hpp"

namespace sofo::control {

struct ControllerConfig {
  std::size_t horizon_T = 24;
  std::size_t T_rl = 1;
  std::size_t T_ft = 168;
  std::optional<double> epsilon;  // unset: scale * validation WMAPE per model
  forecast::UpdateScheme scheme;  // SmallLR by default
  std::size_t n_scenarios = 75;
  std::uint64_t seed = 0;         // scenario sampling
  std::uint64_t model_seed = 0;   // forecast model initialisation and shuffling
  ForecastSettings forecast;
  sim::PerturbationConfig perturb;
  bool oracle = false;      // perfect forecasts
  bool zero_sigma = false;  // scenarios without noise

  void validate() const {
    if (!(T_rl >= 1 && T_rl <= horizon_T)) throw ContractError("T_rl must lie in [1, horizon_T]");
    if (T_ft < 1) throw ContractError("T_ft must be >= 1");
    if (epsilon && !(*epsilon > 0.0)) throw ContractError("epsilon must be > 0");
    if (n_scenarios < 1) throw ContractError("n_scenarios must be >= 1");
    scheme.validate();
    if (auto p = perturb.validate(); !p.empty()) throw ContractError("perturbation: " + p.front());
  }

  TraceConfig trace_config() const { return {horizon_T, T_ft, epsilon, scheme, forecast, oracle, zero_sigma}; }
};

enum class Planner { idle, rule, deterministic, stochastic };

/// How one episode chooses actions.
struct EpisodeOptions {
  std::string name;
  Planner planner = Planner::idle;
  std::size_t horizon_T = 24;
  std::size_t T_rl = 1;
  std::size_t n_scenarios = 75;
  std::uint64_t seed = 0;
  sim::PerturbationConfig perturb;
};

struct ForecastLog {
  std::string target;
  Series predicted, actual;  // h = 0 forecast and realised value per step
};

struct EpisodeResult {
  std::string controller;
  std::size_t t0 = 0;
  std::size_t steps = 0;
  std::vector<std::vector<sim::StorageAction>> requested;  // [k][storage]
  std::vector<std::vector<sim::StorageAction>> applied;    // [k][storage]
  std::vector<std::vector<double>> soc;                    // [k][storage], after the step
  std::vector<std::vector<double>> planned_soc;            // [k][storage]; NaN without a plan
  std::vector<Series> consumption;                         // [building][k]
  Series district;
  evaluate::CostBreakdown costs;  // raw, over the control window
  std::vector<ForecastLog> forecasts;
  std::vector<FineTuneEvent> fine_tunes;
  std::vector<double> dispatch_seconds;  // per 24-step block: inference, fine-tuning, sampling, LP
  std::size_t replans = 0;
  std::vector<std::string> incidents;

  bool operator==(const EpisodeResult& o) const {
    auto same_actions = [](const auto& a, const auto& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size()) return false;
        for (std::size_t s = 0; s < a[k].size(); ++s)
          if (a[k][s].charge != b[k][s].charge || a[k][s].discharge != b[k][s].discharge) return false;
      }
      return true;
    };
    return controller == o.controller && t0 == o.t0 && steps == o.steps && same_actions(requested, o.requested) &&
           same_actions(applied, o.applied) && soc == o.soc && consumption == o.consumption &&
           district == o.district && costs == o.costs && replans == o.replans && incidents == o.incidents;
  }
};

/// RBC schedule: charge 10% of capacity per hour at hours 10-13, discharge the
/// same at 16-19, idle otherwise.
inline sim::StorageAction rbc_action(int hour, const StorageDevice& dev, double step_hours) {
  const double p = 0.1 * dev.e_max / step_hours;
  if (hour >= 10 && hour <= 13) return {p, 0.0};
  if (hour >= 16 && hour <= 19) return {0.0, p};
  return {0.0, 0.0};
}

namespace detail {

inline ProblemInstance planning_instance(const ProblemInstance& inst, std::size_t t, std::size_t len,
                                         const std::vector<double>& soc) {
  auto sub = inst.slice(t, len);
  for (std::size_t s = 0; s < sub.storages.size(); ++s)
    sub.storages[s].e_initial = std::clamp(soc[s], sub.storages[s].e_min, sub.storages[s].e_max);
  return sub;
}

}  // namespace detail

/// Runs one episode over the control window. Forecast-driven planners need a
/// trace built for the same split.
inline EpisodeResult run_episode(const ProblemInstance& inst, const Split& split, const EpisodeOptions& opt,
                                 const ForecastTrace* trace = nullptr) {
  split.validate(inst.horizon());
  const bool planned = opt.planner == Planner::deterministic || opt.planner == Planner::stochastic;
  if (planned) {
    if (!trace || trace->t0 != split.val_end || trace->steps != split.control_steps())
      throw ContractError("planner '" + opt.name + "' needs a forecast trace for this split");
    if (!(opt.T_rl >= 1 && opt.T_rl <= opt.horizon_T)) throw ContractError("T_rl must lie in [1, horizon_T]");
  }
  const std::size_t t0 = split.val_end, steps = split.control_steps();
  const std::size_t S = inst.storages.size(), B = inst.buildings.size();
  EpisodeResult r;
  r.controller = opt.name;
  r.t0 = t0;
  r.steps = steps;
  auto state = sim::initial_state(inst, opt.perturb, t0);

  DispatchPlan plan;
  std::size_t plan_start = 0;
  bool have_plan = false;
  double block_seconds = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = t0 + k;
    std::vector<sim::StorageAction> actions(S);
    std::vector<double> planned_soc(S, std::numeric_limits<double>::quiet_NaN());
    if (opt.planner == Planner::rule) {
      for (std::size_t s = 0; s < S; ++s) actions[s] = rbc_action(inst.grid.hour_of_day(t), inst.storages[s], inst.grid.step_hours);
    } else if (planned) {
      if (trace) block_seconds += trace->step_seconds[k];
      if (!have_plan || k - plan_start >= opt.T_rl) {
        const auto clock = std::chrono::steady_clock::now();
        const std::size_t len = std::min({opt.horizon_T, steps - k, trace->length(k)});
        const auto sub = detail::planning_instance(inst, t, len, state.soc);
        const auto [mean, sigma] = trace->at(inst, k, len);
        lp::LinearProgram lp;
        if (opt.planner == Planner::stochastic) {
          lp = dispatch::build_stochastic(sub, sample_scenarios(mean, sigma, opt.n_scenarios, derive_seed(opt.seed, {t})));
        } else {
          lp = dispatch::build_deterministic(sub, mean);
        }
        auto res = dispatch::solve_and_extract(lp, sub);
        ++r.replans;
        if (res.ok) {
          plan = std::move(res.plan);
        } else {
          // Idle until the next re-plan.
          plan = DispatchPlan{};
          plan.p_charge.assign(S, Series(len, 0.0));
          plan.p_discharge.assign(S, Series(len, 0.0));
          plan.soc.assign(S, Series(len, std::numeric_limits<double>::quiet_NaN()));
          r.incidents.push_back("step " + std::to_string(k) + ": LP " + lp::to_string(res.solution.status) +
                                ", executing zero action");
        }
        plan_start = k;
        have_plan = true;
        block_seconds += detail::seconds_since(clock);
      }
      const std::size_t j = k - plan_start;
      for (std::size_t s = 0; s < S; ++s) {
        actions[s] = {plan.p_charge[s][j], plan.p_discharge[s][j]};
        planned_soc[s] = plan.soc[s][j];
      }
    }
    auto out = sim::step_environment(std::move(state), actions, inst, opt.perturb);
    state = std::move(out.state);
    r.planned_soc.push_back(std::move(planned_soc));
    if ((k + 1) % 24 == 0 || k + 1 == steps) {
      r.dispatch_seconds.push_back(block_seconds);
      block_seconds = 0.0;
    }
  }

  r.requested = state.requested;
  r.applied = state.applied;
  r.soc = state.soc_after;
  r.district = state.district;
  r.consumption.assign(B, Series(steps));
  for (std::size_t k = 0; k < steps; ++k)
    for (std::size_t b = 0; b < B; ++b) r.consumption[b][k] = state.consumption[k][b];
  const auto window = inst.slice(t0, steps);
  r.costs = evaluate::episode_costs(r.consumption, window.market, window.grid);
  if (trace) {
    for (const auto& tt : trace->targets) r.forecasts.push_back({tt.name, tt.predicted_h0, tt.actual_h0});
    r.fine_tunes = trace->fine_tunes;
  }
  return r;
}

/// Builds the forecast trace a forecast-driven controller needs.
inline ForecastTrace make_trace(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg) {
  if (cfg.oracle) return build_trace(inst, split, cfg.trace_config(), nullptr);
  const auto pre = pretrain(inst, split, cfg.forecast, cfg.model_seed, cfg.horizon_T);
  return build_trace(inst, split, cfg.trace_config(), &pre);
}

inline EpisodeOptions options_for(const std::string& name, Planner planner, const ControllerConfig& cfg,
                                  std::size_t T_rl) {
  return {name, planner, cfg.horizon_T, T_rl, cfg.n_scenarios, cfg.seed, cfg.perturb};
}

/// Stochastic planning with online fine-tuning under cfg.scheme, re-planned
/// every cfg.T_rl steps.
inline EpisodeResult run_sofo(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg,
                              const ForecastTrace* trace = nullptr) {
  cfg.validate();
  std::optional<ForecastTrace> own;
  if (!trace) trace = &own.emplace(make_trace(inst, split, cfg));
  return run_episode(inst, split, options_for("SOFO", Planner::stochastic, cfg, cfg.T_rl), trace);
}

/// Point forecasts and the deterministic LP. Day-ahead (re-plan every 24
/// steps, fixed models) or, when adaptive, SelfAdapt-corrected models and
/// re-planning every step.
inline EpisodeResult run_mpc(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg,
                             bool adaptive, const ForecastTrace* trace = nullptr) {
  ControllerConfig c = cfg;
  c.scheme.kind = adaptive ? forecast::SchemeKind::SelfAdapt : forecast::SchemeKind::NoFt;
  c.T_rl = adaptive ? 1 : std::min<std::size_t>(24, c.horizon_T);
  c.validate();
  std::optional<ForecastTrace> own;
  if (!trace) trace = &own.emplace(make_trace(inst, split, c));
  return run_episode(inst, split, options_for(adaptive ? "AMPC" : "MPC", Planner::deterministic, c, c.T_rl), trace);
}

inline EpisodeResult run_rbc(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg) {
  return run_episode(inst, split, options_for("RBC", Planner::rule, cfg, 1));
}

/// Batteries idle: the no-storage reference that scores are normalised by.
inline EpisodeResult run_no_storage(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg) {
  return run_episode(inst, split, options_for("NoStorage", Planner::idle, cfg, 1));
}

/// Perfect-information optimum of the deterministic LP over the control
/// window, starting from the devices' e_initial.
inline double clairvoyant_objective(const ProblemInstance& inst, const Split& split) {
  const auto sub = inst.slice(split.val_end, split.control_steps());
  const auto trace = build_trace(inst, split, TraceConfig{split.control_steps(), 1, std::nullopt, {}, {}, true, true},
                                 nullptr);
  const auto lp = dispatch::build_deterministic(sub, trace.at(inst, 0, split.control_steps()).first);
  const auto res = dispatch::solve_and_extract(lp, sub);
  if (!res.ok) throw ContractError("clairvoyant LP not optimal");
  return res.solution.objective;
}

struct SinglePlan {
  DispatchPlan plan;
  lp::Status status = lp::Status::optimal;
  double objective = 0.0;
  double forecast_seconds = 0.0;  // pre-training excluded
  double solve_seconds = 0.0;     // scenario sampling and LP
};

/// One plan issued at the first control step with the pre-trained models.
inline SinglePlan plan_once(const ProblemInstance& inst, const Split& split, const ControllerConfig& cfg,
                            Planner planner) {
  if (planner != Planner::deterministic && planner != Planner::stochastic)
    throw ContractError("plan_once needs an LP planner");
  cfg.validate();
  split.validate(inst.horizon());
  ControllerConfig c = cfg;
  c.scheme.kind = forecast::SchemeKind::NoFt;
  const Split window{split.train_end, split.val_end, std::min(split.val_end + c.horizon_T, inst.horizon())};
  std::optional<Pretrained> pre;
  if (!c.oracle) pre = pretrain(inst, window, c.forecast, c.model_seed, c.horizon_T);
  SinglePlan out;
  auto clock = std::chrono::steady_clock::now();
  const auto trace = build_trace(inst, window, c.trace_config(), pre ? &*pre : nullptr);
  out.forecast_seconds = detail::seconds_since(clock);
  clock = std::chrono::steady_clock::now();
  const std::size_t len = trace.length(0);
  const auto sub = detail::planning_instance(inst, window.val_end, len,
                                             sim::initial_state(inst, c.perturb, window.val_end).soc);
  const auto [mean, sigma] = trace.at(inst, 0, len);
  const auto lp = planner == Planner::stochastic
                      ? dispatch::build_stochastic(sub, sample_scenarios(mean, sigma, c.n_scenarios,
                                                                         derive_seed(c.seed, {window.val_end})))
                      : dispatch::build_deterministic(sub, mean);
  auto res = dispatch::solve_and_extract(lp, sub);
  out.solve_seconds = detail::seconds_since(clock);
  out.status = res.solution.status;
  out.objective = res.solution.objective;
  if (res.ok) out.plan = std::move(res.plan);
  return out;
}

struct FeasibilityReport {
  std::size_t steps = 0;
  std::size_t soc_violations = 0;
  std::size_t complementarity_violations = 0;
  bool ok() const { return soc_violations == 0 && complementarity_violations == 0; }
};

/// Checks every executed step against the true SOC bounds and exact
/// complementarity.
inline FeasibilityReport check_feasibility(const EpisodeResult& r, const ProblemInstance& inst,
                                           const sim::PerturbationConfig& perturb) {
  FeasibilityReport f;
  for (std::size_t k = 0; k < r.steps; ++k) {
    ++f.steps;
    for (std::size_t s = 0; s < inst.storages.size(); ++s) {
      const auto p = sim::physics(inst.storages[s], perturb, s, inst.grid.step_hours, r.t0 + k);
      const double e = r.soc[k][s];
      if (e < p.e_min - 1e-9 || e > p.e_max + 1e-9) ++f.soc_violations;
      if (r.applied[k][s].charge != 0.0 && r.applied[k][s].discharge != 0.0) ++f.complementarity_violations;
      if (r.applied[k][s].charge < 0.0 || r.applied[k][s].discharge < 0.0) ++f.complementarity_violations;
    }
  }
  return f;
}

/// Long-form trajectory CSV: t, entity, quantity, value.
inline CsvWriter episode_csv(const EpisodeResult& r, const ProblemInstance& inst) {
  CsvWriter w({"t", "entity", "quantity", "value"});
  for (std::size_t k = 0; k < r.steps; ++k) {
    const auto t = static_cast<long>(r.t0 + k);
    for (std::size_t b = 0; b < inst.buildings.size(); ++b)
      w.cell(t).cell(inst.buildings[b].id).cell("consumption").cell(r.consumption[b][k]).end_row();
    w.cell(t).cell("district").cell("consumption").cell(r.district[k]).end_row();
    for (std::size_t s = 0; s < inst.storages.size(); ++s) {
      const std::string id = "battery:" + inst.storages[s].id;
      w.cell(t).cell(id).cell("charge").cell(r.applied[k][s].charge).end_row();
      w.cell(t).cell(id).cell("discharge").cell(r.applied[k][s].discharge).end_row();
      w.cell(t).cell(id).cell("soc").cell(r.soc[k][s]).end_row();
    }
    for (const auto& f : r.forecasts) {
      w.cell(t).cell(f.target).cell("forecast").cell(f.predicted[k]).end_row();
      w.cell(t).cell(f.target).cell("actual").cell(f.actual[k]).end_row();
    }
  }
  return w;
}

/// WMAPE of the h = 0 forecasts per target.
inline std::vector<std::pair<std::string, double>> forecast_wmape(const EpisodeResult& r) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& f : r.forecasts) out.emplace_back(f.target, detail::wmape_or_zero(f.actual, f.predicted));
  return out;
}

}  // namespace sofo::control

#include <gtest/gtest.h>

#include <cmath>

#include "sofo/control/controller.hpp"
#include "sofo/data.hpp"

using namespace sofo;
using namespace sofo::control;

namespace {

// 7 days; the last 72 hours are controlled.
ProblemInstance week() {
  data::SyntheticSpec spec;
  spec.days = 7;
  spec.seed = 12;
  return data::generate_synthetic(spec);
}
const Split kWeekSplit{48, 96, 168};

ControllerConfig oracle_config(std::size_t horizon) {
  ControllerConfig c;
  c.oracle = true;
  c.zero_sigma = true;
  c.horizon_T = horizon;
  c.n_scenarios = 5;
  return c;
}

// 30 days with a +20% load shift at day 15.
const ProblemInstance& drift_month() {
  static const ProblemInstance inst = [] {
    data::SyntheticSpec spec;
    spec.days = 30;
    spec.drift = {15, 1.2};
    return data::generate_synthetic(spec);
  }();
  return inst;
}
const Split kMonthSplit{240, 336, 720};

double average(const EpisodeResult& r, const EpisodeResult& base) {
  return evaluate::normalize(r.costs, base.costs).average;
}

}  // namespace

TEST(Rbc, Schedule) {
  StorageDevice d;
  d.e_max = 6.4;
  const auto charge = rbc_action(11, d, 1.0);
  EXPECT_DOUBLE_EQ(charge.charge, 0.64);
  EXPECT_EQ(charge.discharge, 0.0);
  const auto discharge = rbc_action(18, d, 1.0);
  EXPECT_EQ(discharge.charge, 0.0);
  EXPECT_DOUBLE_EQ(discharge.discharge, 0.64);
  const auto idle = rbc_action(3, d, 1.0);
  EXPECT_EQ(idle.charge, 0.0);
  EXPECT_EQ(idle.discharge, 0.0);
  for (int h : {10, 13}) EXPECT_GT(rbc_action(h, d, 1.0).charge, 0.0);
  for (int h : {9, 14, 15, 20}) {
    EXPECT_EQ(rbc_action(h, d, 1.0).charge, 0.0);
    EXPECT_EQ(rbc_action(h, d, 1.0).discharge, 0.0);
  }
}

TEST(PerfectInformation, SofoAndMpcReachClairvoyantOptimum) {
  const auto inst = week();
  const double opt = clairvoyant_objective(inst, kWeekSplit);
  const auto cfg = oracle_config(kWeekSplit.control_steps());
  const auto sofo = run_sofo(inst, kWeekSplit, cfg);
  const auto mpc = run_mpc(inst, kWeekSplit, cfg, false);
  EXPECT_NEAR(sofo.costs.price, opt, 1e-6);
  EXPECT_NEAR(mpc.costs.price, opt, 1e-6);
  EXPECT_TRUE(sofo.incidents.empty());
  const auto idle = run_no_storage(inst, kWeekSplit, cfg);
  EXPECT_LT(opt, idle.costs.price);
}

TEST(PerfectInformation, PlannedSocIsRealised) {
  const auto inst = week();
  const auto r = run_sofo(inst, kWeekSplit, oracle_config(24));
  for (std::size_t k = 0; k < r.steps; ++k)
    for (std::size_t s = 0; s < inst.storages.size(); ++s) EXPECT_EQ(r.planned_soc[k][s], r.soc[k][s]) << k;
  for (std::size_t k = 0; k < r.steps; ++k)
    for (std::size_t s = 0; s < inst.storages.size(); ++s) {
      EXPECT_EQ(r.requested[k][s].charge, r.applied[k][s].charge);
      EXPECT_EQ(r.requested[k][s].discharge, r.applied[k][s].discharge);
    }
}

TEST(Episode, ShapesAndReplanCounts) {
  const auto inst = week();
  auto cfg = oracle_config(24);
  cfg.T_rl = 6;
  const auto r = run_sofo(inst, kWeekSplit, cfg);
  EXPECT_EQ(r.steps, 72u);
  EXPECT_EQ(r.replans, 12u);
  EXPECT_EQ(r.district.size(), 72u);
  EXPECT_EQ(r.consumption.size(), inst.buildings.size());
  EXPECT_EQ(r.dispatch_seconds.size(), 3u);
  EXPECT_EQ(run_mpc(inst, kWeekSplit, cfg, false).replans, 3u);
  EXPECT_EQ(run_mpc(inst, kWeekSplit, cfg, true).replans, 72u);
  EXPECT_EQ(run_rbc(inst, kWeekSplit, cfg).replans, 0u);
  const auto base = run_no_storage(inst, kWeekSplit, cfg);
  for (const auto& a : base.applied)
    for (const auto& s : a) EXPECT_EQ(s.charge + s.discharge, 0.0);
}

TEST(Episode, RejectsBadInputs) {
  const auto inst = week();
  auto cfg = oracle_config(24);
  cfg.T_rl = 25;
  EXPECT_THROW(run_sofo(inst, kWeekSplit, cfg), ContractError);
  EXPECT_THROW(run_episode(inst, kWeekSplit, options_for("x", Planner::stochastic, oracle_config(24), 1)),
               ContractError);
  EXPECT_THROW(run_rbc(inst, Split{48, 96, 500}, cfg), ContractError);
}

TEST(Episode, InfeasibleLpFallsBackToIdle) {
  auto inst = week();
  // A generator lower bound above the load plus charging headroom leaves no
  // feasible grid draw.
  inst.generators[0].p_min.assign(inst.horizon(), 0.0);
  inst.generators[0].p_max_capacity = 1000.0;
  for (std::size_t t = 100; t < 103; ++t) inst.generators[0].p_min[t] = 500.0;
  const auto r = run_sofo(inst, kWeekSplit, oracle_config(24));
  EXPECT_FALSE(r.incidents.empty());
  EXPECT_EQ(r.steps, 72u);
  EXPECT_TRUE(check_feasibility(r, inst, {}).ok());
}

TEST(Feasibility, EveryControllerUnderPerturbation) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  cfg.n_scenarios = 10;
  cfg.perturb.efficiency_true.assign(inst.storages.size(), {0.9, 0.85});
  cfg.perturb.capacity_scale = 0.8;
  cfg.perturb.efficiency_jitter = 0.02;
  const auto trace = make_trace(inst, kMonthSplit, cfg);
  for (const auto& r : {run_sofo(inst, kMonthSplit, cfg, &trace), run_rbc(inst, kMonthSplit, cfg),
                        run_no_storage(inst, kMonthSplit, cfg)}) {
    const auto f = check_feasibility(r, inst, cfg.perturb);
    EXPECT_EQ(f.steps, kMonthSplit.control_steps());
    EXPECT_TRUE(f.ok()) << r.controller << " soc " << f.soc_violations << " comp " << f.complementarity_violations;
  }
}

TEST(Determinism, IdenticalRunsAreBitwiseEqual) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  cfg.n_scenarios = 10;
  const auto a = run_sofo(inst, kMonthSplit, cfg);
  const auto b = run_sofo(inst, kMonthSplit, cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(episode_csv(a, inst).str(), episode_csv(b, inst).str());
  cfg.seed = 1;
  EXPECT_NE(episode_csv(run_sofo(inst, kMonthSplit, cfg), inst).str(), episode_csv(a, inst).str());
}

TEST(FineTuning, NoFtKeepsParameters) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  cfg.scheme.kind = forecast::SchemeKind::NoFt;
  const auto trace = make_trace(inst, kMonthSplit, cfg);
  EXPECT_TRUE(trace.fine_tunes.empty());
  for (const auto& t : trace.targets) {
    EXPECT_EQ(t.initial.params, t.final.params) << t.name;
    EXPECT_EQ(t.initial.correction_a, t.final.correction_a);
  }
  cfg.scheme.kind = forecast::SchemeKind::SmallLR;
  const auto tuned = make_trace(inst, kMonthSplit, cfg);
  ASSERT_FALSE(tuned.fine_tunes.empty());
  bool changed = false;
  for (const auto& t : tuned.targets) changed = changed || t.initial.params != t.final.params;
  EXPECT_TRUE(changed);
}

// Load models scaled by 1.3 through their output correction.
TEST(BiasedForecasts, DayAheadSuffersAndSelfAdaptRecovers) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  const auto base = run_no_storage(inst, kMonthSplit, cfg);
  const auto pre = pretrain(inst, kMonthSplit, cfg.forecast, cfg.model_seed, cfg.horizon_T);
  auto biased = pre;
  const auto targets = target_series(inst);
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i].name.rfind("load:", 0) == 0) biased.models[i].correction_a = 1.3;

  auto noft = cfg;
  noft.scheme.kind = forecast::SchemeKind::NoFt;
  auto adapt = cfg;
  adapt.scheme.kind = forecast::SchemeKind::SelfAdapt;
  const auto clean_trace = build_trace(inst, kMonthSplit, noft.trace_config(), &pre);
  const auto biased_trace = build_trace(inst, kMonthSplit, noft.trace_config(), &biased);
  const auto adapt_trace = build_trace(inst, kMonthSplit, adapt.trace_config(), &biased);

  const double clean = average(run_mpc(inst, kMonthSplit, cfg, false, &clean_trace), base);
  const double mpc = average(run_mpc(inst, kMonthSplit, cfg, false, &biased_trace), base);
  const double ampc = average(run_mpc(inst, kMonthSplit, cfg, true, &adapt_trace), base);
  EXPECT_GE(mpc, clean);
  EXPECT_LE(ampc, mpc);
  EXPECT_NEAR(mpc - clean, 0.00995, 1e-4);
  EXPECT_NEAR(mpc - ampc, 0.00911, 1e-4);
}

TEST(Controllers, SofoBeatsDayAheadMpcUnderDrift) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  cfg.perturb.efficiency_true.assign(inst.storages.size(), {0.95, 0.95});
  const auto base = run_no_storage(inst, kMonthSplit, cfg);
  const double sofo = average(run_sofo(inst, kMonthSplit, cfg), base);
  const double mpc = average(run_mpc(inst, kMonthSplit, cfg, false), base);
  EXPECT_LT(sofo, mpc);
  EXPECT_NEAR(mpc - sofo, 0.00958, 1e-4);
}

TEST(Controllers, OrderingOnDriftDataset) {
  const auto& inst = drift_month();
  ControllerConfig cfg;
  cfg.perturb.efficiency_true.assign(inst.storages.size(), {0.95, 0.95});
  const auto base = run_no_storage(inst, kMonthSplit, cfg);
  const double sofo = average(run_sofo(inst, kMonthSplit, cfg), base);
  const double ampc = average(run_mpc(inst, kMonthSplit, cfg, true), base);
  const double mpc = average(run_mpc(inst, kMonthSplit, cfg, false), base);
  const double rbc = average(run_rbc(inst, kMonthSplit, cfg), base);
  EXPECT_LE(sofo, ampc);
  EXPECT_LE(ampc, mpc);
  EXPECT_LE(mpc, rbc);
  EXPECT_LT(rbc, 1.0);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.T_rl = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.T_ft = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.n_scenarios = 0;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(Reporting, WmapeAndCsv) {
  const auto inst = week();
  const auto r = run_sofo(inst, kWeekSplit, oracle_config(24));
  for (const auto& [name, w] : forecast_wmape(r)) EXPECT_EQ(w, 0.0) << name;
  const auto csv = episode_csv(r, inst).str();
  EXPECT_EQ(csv.rfind("t,entity,quantity,value\n96,", 0), 0u);
  std::size_t rows = 0;
  for (char ch : csv) rows += ch == '\n';
  const std::size_t per_step = inst.buildings.size() + 1 + 3 * inst.storages.size() + 2 * r.forecasts.size();
  EXPECT_EQ(rows, 1 + 72 * per_step);
}

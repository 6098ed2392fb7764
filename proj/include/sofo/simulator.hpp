#pragma once

// Ground-truth environment. Applies battery actions with the true (possibly
// perturbed) physics and records realised building consumption.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/rng.hpp"
#include "sofo/serialize.hpp"

namespace sofo::sim {

struct PerturbationConfig {
  /// Per-storage (eta_charge, eta_discharge). Empty means the device values.
  std::vector<std::pair<double, double>> efficiency_true;
  /// Multiplier on every storage e_max.
  double capacity_scale = 1.0;
  /// Relative std of a per-step multiplicative jitter on the efficiencies.
  double efficiency_jitter = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::string> validate() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < efficiency_true.size(); ++i) {
      const auto [c, d] = efficiency_true[i];
      if (!(c > 0.0 && c <= 1.0) || !(d > 0.0 && d <= 1.0))
        out.push_back("efficiency_true[" + std::to_string(i) + "] outside (0,1]");
    }
    if (!(capacity_scale > 0.0)) out.push_back("capacity_scale must be > 0");
    if (!(efficiency_jitter >= 0.0)) out.push_back("efficiency_jitter must be >= 0");
    return out;
  }
};

/// Effective parameters of one battery for one step.
struct BatteryPhysics {
  double e_min = 0.0;
  double e_max = 0.0;
  double p_charge_max = 0.0;
  double p_discharge_max = 0.0;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  double step_hours = 1.0;
};

inline BatteryPhysics physics(const StorageDevice& dev, const PerturbationConfig& perturb,
                              std::size_t storage_index = 0, double step_hours = 1.0,
                              std::size_t t = 0) {
  BatteryPhysics p;
  p.e_min = dev.e_min;
  p.e_max = std::max(dev.e_min, dev.e_max * perturb.capacity_scale);
  p.p_charge_max = dev.p_charge_max;
  p.p_discharge_max = dev.p_discharge_max;
  p.eta_charge = dev.eta_charge;
  p.eta_discharge = dev.eta_discharge;
  if (storage_index < perturb.efficiency_true.size()) {
    p.eta_charge = perturb.efficiency_true[storage_index].first;
    p.eta_discharge = perturb.efficiency_true[storage_index].second;
  }
  if (perturb.efficiency_jitter > 0.0) {
    Rng rng(derive_seed(perturb.seed, {storage_index, t}));
    std::normal_distribution<double> n(0.0, perturb.efficiency_jitter);
    p.eta_charge = std::clamp(p.eta_charge * (1.0 + n(rng)), 1e-3, 1.0);
    p.eta_discharge = std::clamp(p.eta_discharge * (1.0 + n(rng)), 1e-3, 1.0);
  }
  p.step_hours = step_hours;
  return p;
}

struct BatteryStep {
  double soc = 0.0;
  double charge = 0.0;     // applied, kW
  double discharge = 0.0;  // applied, kW
};

/// Applies one charge or discharge request. Requests are clipped to the power
/// limits and the energy headroom so the result always lies in [e_min, e_max].
inline BatteryStep step_battery(double soc, double action_charge, double action_discharge,
                                const BatteryPhysics& p) {
  if (action_charge < 0.0 || action_discharge < 0.0)
    throw ContractError("battery actions must be nonnegative");
  if (action_charge > 0.0 && action_discharge > 0.0)
    throw ContractError("simultaneous charge and discharge requested");
  soc = std::clamp(soc, p.e_min, p.e_max);
  const double dt = p.step_hours;
  BatteryStep r;
  r.charge = std::max(0.0, std::min({action_charge, p.p_charge_max, (p.e_max - soc) / (p.eta_charge * dt)}));
  r.discharge =
      std::max(0.0, std::min({action_discharge, p.p_discharge_max, (soc - p.e_min) * p.eta_discharge / dt}));
  r.soc = std::clamp(soc + p.eta_charge * r.charge * dt - r.discharge * dt / p.eta_discharge, p.e_min, p.e_max);
  return r;
}

inline BatteryStep step_battery(double soc, double action_charge, double action_discharge,
                                const StorageDevice& dev, const PerturbationConfig& perturb,
                                std::size_t storage_index = 0, double step_hours = 1.0) {
  return step_battery(soc, action_charge, action_discharge, physics(dev, perturb, storage_index, step_hours));
}

struct StorageAction {
  double charge = 0.0;
  double discharge = 0.0;
};

struct SimState {
  std::size_t t = 0;
  std::vector<double> soc;
  // history, one entry per executed step
  std::vector<std::vector<double>> consumption;  // [step][building]
  std::vector<double> district;                  // [step]
  std::vector<std::vector<StorageAction>> applied;    // [step][storage]
  std::vector<std::vector<StorageAction>> requested;  // [step][storage]
  std::vector<std::vector<double>> soc_after;         // [step][storage]
};

inline SimState initial_state(const ProblemInstance& inst, const PerturbationConfig& perturb,
                              std::size_t t0 = 0) {
  SimState s;
  s.t = t0;
  for (std::size_t i = 0; i < inst.storages.size(); ++i) {
    const auto p = physics(inst.storages[i], perturb, i, inst.grid.step_hours);
    s.soc.push_back(std::clamp(inst.storages[i].e_initial, p.e_min, p.e_max));
  }
  return s;
}

struct StepOutcome {
  SimState state;
  std::vector<double> consumption;  // per building, kW (negative = export)
  double district = 0.0;
};

/// Advances the environment by one step. Consumption of building i is
/// load - realised solar + applied charge - applied discharge of its batteries.
inline StepOutcome step_environment(SimState state, const std::vector<StorageAction>& actions,
                                    const ProblemInstance& inst, const PerturbationConfig& perturb) {
  if (state.t >= inst.horizon()) throw std::out_of_range("simulation step " + std::to_string(state.t) +
                                                         " beyond horizon " + std::to_string(inst.horizon()));
  if (actions.size() != inst.storages.size()) throw ShapeError("one action per storage required");
  const std::size_t t = state.t;
  std::vector<double> cons(inst.buildings.size());
  for (std::size_t b = 0; b < inst.buildings.size(); ++b)
    cons[b] = inst.buildings[b].load[t] - inst.buildings[b].solar_capacity[t];

  std::vector<StorageAction> applied(actions.size());
  std::vector<double> soc_after(actions.size());
  for (std::size_t s = 0; s < actions.size(); ++s) {
    const auto p = physics(inst.storages[s], perturb, s, inst.grid.step_hours, t);
    const auto r = step_battery(state.soc[s], actions[s].charge, actions[s].discharge, p);
    state.soc[s] = r.soc;
    soc_after[s] = r.soc;
    applied[s] = {r.charge, r.discharge};
    const std::size_t b = inst.building_index(inst.storages[s].id);
    if (b < cons.size()) cons[b] += r.charge - r.discharge;
  }
  double district = 0.0;
  for (double c : cons) district += c;

  state.consumption.push_back(cons);
  state.district.push_back(district);
  state.applied.push_back(applied);
  state.requested.push_back(actions);
  state.soc_after.push_back(soc_after);
  state.t = t + 1;
  return {std::move(state), std::move(cons), district};
}

/// Long-form trajectory: one row per (t, entity, quantity, value).
/// `t0` is the instance index of the first recorded step.
inline CsvWriter trajectory_csv(const SimState& s, const ProblemInstance& inst, std::size_t t0) {
  CsvWriter w({"t", "entity", "quantity", "value"});
  for (std::size_t k = 0; k < s.district.size(); ++k) {
    const auto t = static_cast<long>(t0 + k);
    for (std::size_t b = 0; b < inst.buildings.size(); ++b)
      w.cell(t).cell(inst.buildings[b].id).cell("consumption").cell(s.consumption[k][b]).end_row();
    w.cell(t).cell("district").cell("consumption").cell(s.district[k]).end_row();
    for (std::size_t i = 0; i < inst.storages.size(); ++i) {
      const auto& id = "battery:" + inst.storages[i].id;
      w.cell(t).cell(id).cell("charge").cell(s.applied[k][i].charge).end_row();
      w.cell(t).cell(id).cell("discharge").cell(s.applied[k][i].discharge).end_row();
      w.cell(t).cell(id).cell("clipped").cell(
          (s.requested[k][i].charge - s.applied[k][i].charge) +
          (s.requested[k][i].discharge - s.applied[k][i].discharge)).end_row();
      w.cell(t).cell(id).cell("soc").cell(s.soc_after[k][i]).end_row();
    }
  }
  return w;
}

}  // namespace sofo::sim

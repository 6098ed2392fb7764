#pragma once

// Small hand-built instances shared by several test files.

#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/scenario.hpp"

namespace sofo::testing {

/// Instance with one building per entry of `loads` and the given prices.
/// Solar series default to zero; carbon intensity is 1 everywhere.
inline ProblemInstance make_instance(const std::vector<Series>& loads, const Series& price,
                                     const std::vector<Series>& solar = {}) {
  ProblemInstance inst;
  inst.grid.horizon_T = price.size();
  for (std::size_t b = 0; b < loads.size(); ++b) {
    const std::string id = "b" + std::to_string(b);
    Series s = b < solar.size() ? solar[b] : Series(price.size(), 0.0);
    inst.buildings.push_back({id, loads[b], s});
  }
  inst.market.price = price;
  inst.market.carbon_intensity.assign(price.size(), 1.0);
  return inst;
}

inline void add_generator(ProblemInstance& inst, std::size_t building, double nameplate) {
  inst.generators.push_back({inst.buildings[building].id, Series(inst.horizon(), 0.0), nameplate});
}

inline void add_battery(ProblemInstance& inst, std::size_t building, double e_max, double p_max,
                        double e_initial = 0.0) {
  StorageDevice s;
  s.id = inst.buildings[building].id;
  s.e_max = e_max;
  s.p_charge_max = p_max;
  s.p_discharge_max = p_max;
  s.e_initial = e_initial;
  inst.storages.push_back(s);
}

/// Point forecast equal to the realised series of the instance.
inline PointForecast perfect_forecast(const ProblemInstance& inst) {
  PointForecast f;
  for (const auto& g : inst.generators) f.solar.push_back(inst.buildings[inst.building_index(g.id)].solar_capacity);
  for (const auto& b : inst.buildings) f.load.push_back(b.load);
  f.price = inst.market.price;
  return f;
}

inline ScenarioSet replicate(const PointForecast& f, std::size_t N) {
  ScenarioSet s;
  s.n_scenarios = N;
  s.solar.assign(N, f.solar);
  s.load.assign(N, f.load);
  s.price.assign(N, f.price);
  return s;
}

}  // namespace sofo::testing

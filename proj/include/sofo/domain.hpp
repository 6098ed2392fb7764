#pragma once

// Core value types of the dispatch problem: the time grid, devices, market
// and building series, the problem instance and a dispatch plan.
//
// Units: power in kW (per-step average), energy in kWh, price in $/kWh,
// carbon intensity in kg CO2/kWh. Energy per step = power * step_hours.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sofo/errors.hpp"

namespace sofo {

using Series = std::vector<double>;

/// Calendar-aware discretisation of the dispatch period. `start_index` counts
/// hours from Monday 00:00, 1 January of a 365-day year.
struct TimeGrid {
  std::int64_t start_index = 0;
  std::size_t horizon_T = 1;
  double step_hours = 1.0;

  std::int64_t hour_index(std::size_t i) const {
    return start_index + static_cast<std::int64_t>(std::floor(static_cast<double>(i) * step_hours));
  }
  int hour_of_day(std::size_t i) const { return static_cast<int>(floor_mod(hour_index(i), 24)); }
  int day_of_week(std::size_t i) const {
    return static_cast<int>(floor_mod(floor_div(hour_index(i), 24), 7));
  }
  int day_of_year(std::size_t i) const {
    return static_cast<int>(floor_mod(floor_div(hour_index(i), 24), 365));
  }
  /// 0-based month (0 = January).
  int month_of_year(std::size_t i) const {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int d = day_of_year(i);
    int m = 0;
    while (d >= kDays[static_cast<std::size_t>(m)]) {
      d -= kDays[static_cast<std::size_t>(m)];
      ++m;
    }
    return m;
  }
  /// Months elapsed since the start of the year count; nondecreasing in i.
  long month_label(std::size_t i) const {
    const auto year = floor_div(floor_div(hour_index(i), 24), 365);
    return static_cast<long>(year * 12 + month_of_year(i));
  }

  TimeGrid slice(std::size_t offset, std::size_t length) const {
    TimeGrid g = *this;
    g.start_index = hour_index(offset);
    g.horizon_T = length;
    return g;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }
  static std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }
};

/// Dispatchable (curtailable) generation, e.g. rooftop PV. The id names the
/// building the device is attached to.
struct GenerationDevice {
  std::string id;
  Series p_min;                 // kW, per step
  double p_max_capacity = 0.0;  // nameplate, kW

  bool operator==(const GenerationDevice&) const = default;
};

/// Battery. The id names the building the device is attached to. Efficiencies
/// are the physical truth; the optimizer always plans with unit efficiency.
struct StorageDevice {
  std::string id;
  double e_min = 0.0;
  double e_max = 0.0;
  double p_charge_max = 0.0;
  double p_discharge_max = 0.0;
  double e_initial = 0.0;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;

  bool operator==(const StorageDevice&) const = default;
};

struct MarketSeries {
  Series price;             // $/kWh
  Series carbon_intensity;  // kg CO2/kWh

  bool operator==(const MarketSeries&) const = default;
};

struct BuildingSeries {
  std::string id;
  Series load;            // kW
  Series solar_capacity;  // realised max solar generation, kW

  bool operator==(const BuildingSeries&) const = default;
};

struct ProblemInstance {
  TimeGrid grid;
  std::vector<BuildingSeries> buildings;
  std::vector<GenerationDevice> generators;
  std::vector<StorageDevice> storages;
  MarketSeries market;

  std::size_t horizon() const { return grid.horizon_T; }

  /// Index of the building with the given id, or buildings.size().
  std::size_t building_index(const std::string& id) const {
    for (std::size_t i = 0; i < buildings.size(); ++i)
      if (buildings[i].id == id) return i;
    return buildings.size();
  }

  /// Sub-window [offset, offset + length) of every series. Device parameters
  /// are copied unchanged.
  ProblemInstance slice(std::size_t offset, std::size_t length) const {
    if (offset + length > horizon())
      throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                       ") exceeds horizon " + std::to_string(horizon()));
    auto cut = [&](const Series& s) {
      return Series(s.begin() + static_cast<std::ptrdiff_t>(offset),
                    s.begin() + static_cast<std::ptrdiff_t>(offset + length));
    };
    ProblemInstance out;
    out.grid = grid.slice(offset, length);
    for (const auto& b : buildings) out.buildings.push_back({b.id, cut(b.load), cut(b.solar_capacity)});
    for (const auto& g : generators) out.generators.push_back({g.id, cut(g.p_min), g.p_max_capacity});
    out.storages = storages;
    out.market = {cut(market.price), cut(market.carbon_intensity)};
    return out;
  }

  bool operator==(const ProblemInstance&) const = default;
};

/// Optimizer output. Outer vectors index devices, inner vectors index steps.
struct DispatchPlan {
  Series p_grid;
  std::vector<Series> p_gen;
  std::vector<Series> p_charge;
  std::vector<Series> p_discharge;
  std::vector<Series> soc;

  std::size_t horizon() const { return p_grid.size(); }

  bool operator==(const DispatchPlan&) const = default;
};

/// One invariant breach. `path` locates the offending field, e.g.
/// "storages[1].e_initial" or "market.price".
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

namespace detail {

inline void check_series(std::vector<Violation>& out, const std::string& path, const Series& s,
                         std::size_t expected, bool nonnegative) {
  if (s.size() != expected) {
    out.push_back({path, "length " + std::to_string(s.size()) + " != horizon " +
                             std::to_string(expected)});
    return;
  }
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (!std::isfinite(s[t])) {
      out.push_back({path + "[" + std::to_string(t) + "]", "not finite"});
      return;
    }
    if (nonnegative && s[t] < 0.0) {
      out.push_back({path + "[" + std::to_string(t) + "]", "negative value"});
      return;
    }
  }
}

inline bool in_unit_interval(double eta) { return eta > 0.0 && eta <= 1.0; }

}  // namespace detail

/// Every type-invariant breach of the instance; empty iff valid.
inline std::vector<Violation> validate_instance(const ProblemInstance& inst) {
  std::vector<Violation> out;
  const std::size_t T = inst.grid.horizon_T;
  if (T < 1) out.push_back({"grid.horizon_T", "must be >= 1"});
  if (!(inst.grid.step_hours > 0.0)) out.push_back({"grid.step_hours", "must be > 0"});
  if (inst.buildings.empty()) out.push_back({"buildings", "at least one building required"});

  for (std::size_t i = 0; i < inst.buildings.size(); ++i) {
    const auto& b = inst.buildings[i];
    const std::string p = "buildings[" + std::to_string(i) + "]";
    detail::check_series(out, p + ".load", b.load, T, true);
    detail::check_series(out, p + ".solar_capacity", b.solar_capacity, T, true);
  }
  for (std::size_t i = 0; i < inst.generators.size(); ++i) {
    const auto& g = inst.generators[i];
    const std::string p = "generators[" + std::to_string(i) + "]";
    if (inst.building_index(g.id) == inst.buildings.size())
      out.push_back({p + ".id", "no building named '" + g.id + "'"});
    detail::check_series(out, p + ".p_min", g.p_min, T, true);
    if (g.p_min.size() == T) {
      for (std::size_t t = 0; t < T; ++t) {
        if (g.p_min[t] > g.p_max_capacity) {
          out.push_back({p + ".p_min[" + std::to_string(t) + "]", "exceeds p_max_capacity"});
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < inst.storages.size(); ++i) {
    const auto& s = inst.storages[i];
    const std::string p = "storages[" + std::to_string(i) + "]";
    if (inst.building_index(s.id) == inst.buildings.size())
      out.push_back({p + ".id", "no building named '" + s.id + "'"});
    if (!(s.e_min >= 0.0)) out.push_back({p + ".e_min", "must be >= 0"});
    if (!(s.e_max >= s.e_min)) out.push_back({p + ".e_max", "must be >= e_min"});
    if (s.e_initial < s.e_min) out.push_back({p + ".e_initial", "below e_min"});
    if (s.e_initial > s.e_max) out.push_back({p + ".e_initial", "above e_max"});
    if (!(s.p_charge_max > 0.0)) out.push_back({p + ".p_charge_max", "must be > 0"});
    if (!(s.p_discharge_max > 0.0)) out.push_back({p + ".p_discharge_max", "must be > 0"});
    if (!detail::in_unit_interval(s.eta_charge)) out.push_back({p + ".eta_charge", "must be in (0,1]"});
    if (!detail::in_unit_interval(s.eta_discharge))
      out.push_back({p + ".eta_discharge", "must be in (0,1]"});
  }
  detail::check_series(out, "market.price", inst.market.price, T, true);
  detail::check_series(out, "market.carbon_intensity", inst.market.carbon_intensity, T, true);
  return out;
}

/// Checks a plan against the grid bound, device bounds, the unit-efficiency
/// state-of-charge recursion and exact complementarity. Power balance depends
/// on the loads the plan was built for and is checked by the optimizer tests.
inline std::vector<Violation> validate_plan(const ProblemInstance& inst, const DispatchPlan& plan,
                                            double tol = 1e-9) {
  std::vector<Violation> out;
  const std::size_t T = plan.horizon();
  const double dt = inst.grid.step_hours;
  auto loc = [](const std::string& name, std::size_t d, std::size_t t) {
    return name + "[" + std::to_string(d) + "][" + std::to_string(t) + "]";
  };
  for (std::size_t t = 0; t < T; ++t)
    if (plan.p_grid[t] < -tol) out.push_back({"p_grid[" + std::to_string(t) + "]", "negative grid draw"});

  if (plan.p_gen.size() != inst.generators.size())
    out.push_back({"p_gen", "generator count mismatch"});
  for (std::size_t g = 0; g < std::min(plan.p_gen.size(), inst.generators.size()); ++g) {
    const auto& dev = inst.generators[g];
    if (plan.p_gen[g].size() != T) {
      out.push_back({"p_gen[" + std::to_string(g) + "]", "length mismatch"});
      continue;
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double lo = t < dev.p_min.size() ? dev.p_min[t] : 0.0;
      if (plan.p_gen[g][t] < lo - tol || plan.p_gen[g][t] > dev.p_max_capacity + tol)
        out.push_back({loc("p_gen", g, t), "outside generation bounds"});
    }
  }

  const std::size_t S = inst.storages.size();
  if (plan.p_charge.size() != S || plan.p_discharge.size() != S || plan.soc.size() != S) {
    out.push_back({"storage", "storage count mismatch"});
    return out;
  }
  for (std::size_t s = 0; s < S; ++s) {
    const auto& dev = inst.storages[s];
    if (plan.p_charge[s].size() != T || plan.p_discharge[s].size() != T || plan.soc[s].size() != T) {
      out.push_back({"storage[" + std::to_string(s) + "]", "length mismatch"});
      continue;
    }
    double prev = dev.e_initial;
    for (std::size_t t = 0; t < T; ++t) {
      const double c = plan.p_charge[s][t];
      const double d = plan.p_discharge[s][t];
      if (c < -tol || c > dev.p_charge_max + tol) out.push_back({loc("p_charge", s, t), "outside charge bounds"});
      if (d < -tol || d > dev.p_discharge_max + tol)
        out.push_back({loc("p_discharge", s, t), "outside discharge bounds"});
      if (c != 0.0 && d != 0.0) out.push_back({loc("p_charge", s, t), "simultaneous charge and discharge"});
      const double e = plan.soc[s][t];
      if (e < dev.e_min - tol || e > dev.e_max + tol) out.push_back({loc("soc", s, t), "outside soc bounds"});
      if (std::abs(e - (prev + (c - d) * dt)) > tol * std::max(1.0, std::abs(e)))
        out.push_back({loc("soc", s, t), "breaks soc recursion"});
      prev = e;
    }
  }
  return out;
}

}  // namespace sofo

#pragma once

// Episode scoring: emission, price and grid costs, normalisation against the
// no-storage baseline, and forecast WMAPE.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/errors.hpp"
#include "sofo/serialize.hpp"

namespace sofo::evaluate {

struct CostBreakdown {
  double emission = 0.0;
  double price = 0.0;
  double grid = 0.0;
  double average = 0.0;  // set by normalize()

  bool operator==(const CostBreakdown&) const = default;
};

/// sum_t sum_i max(E_i,t, 0) c_t. consumptions is indexed [building][t].
inline double emission_cost(const std::vector<Series>& consumptions, const Series& carbon) {
  double total = 0.0;
  for (std::size_t i = 0; i < consumptions.size(); ++i) {
    if (consumptions[i].size() != carbon.size())
      throw ShapeError("building " + std::to_string(i) + " consumption length differs from carbon series");
    for (std::size_t t = 0; t < carbon.size(); ++t) total += std::max(consumptions[i][t], 0.0) * carbon[t];
  }
  return total;
}

/// sum_t max(E_dist_t, 0) p_t.
inline double price_cost(const Series& district, const Series& price) {
  if (district.size() != price.size()) throw ShapeError("district consumption length differs from price series");
  double total = 0.0;
  for (std::size_t t = 0; t < price.size(); ++t) total += std::max(district[t], 0.0) * price[t];
  return total;
}

/// Ramping sum_t |E_{t+1} - E_t|.
inline double ramping(const Series& district) {
  double r = 0.0;
  for (std::size_t t = 1; t < district.size(); ++t) r += std::abs(district[t] - district[t - 1]);
  return r;
}

/// Sum over months of mean / max of district consumption. A month whose
/// maximum is not positive contributes 1.
inline double load_factor(const Series& district, const std::vector<long>& month_labels) {
  if (district.size() != month_labels.size()) throw ShapeError("month labels length differs from district series");
  double total = 0.0;
  std::size_t start = 0;
  while (start < district.size()) {
    std::size_t end = start;
    double sum = 0.0, peak = -1e300;
    while (end < district.size() && month_labels[end] == month_labels[start]) {
      sum += district[end];
      peak = std::max(peak, district[end]);
      ++end;
    }
    if (end < district.size() && month_labels[end] < month_labels[start])
      throw ContractError("month labels must be nondecreasing");
    const double mean = sum / static_cast<double>(end - start);
    total += peak > 0.0 ? mean / peak : 1.0;
    start = end;
  }
  return total;
}

/// (ramping + load factor) / 2.
inline double grid_cost(const Series& district, const std::vector<long>& month_labels) {
  if (district.size() < 2) throw ContractError("grid cost needs at least 2 steps");
  return 0.5 * (ramping(district) + load_factor(district, month_labels));
}

inline std::vector<long> month_labels(const TimeGrid& grid) {
  std::vector<long> m(grid.horizon_T);
  for (std::size_t t = 0; t < m.size(); ++t) m[t] = grid.month_label(t);
  return m;
}

/// District series from per-building consumptions indexed [building][t].
inline Series district_of(const std::vector<Series>& consumptions) {
  if (consumptions.empty()) return {};
  Series d(consumptions.front().size(), 0.0);
  for (const auto& b : consumptions) {
    if (b.size() != d.size()) throw ShapeError("building consumption series differ in length");
    for (std::size_t t = 0; t < d.size(); ++t) d[t] += b[t];
  }
  return d;
}

/// Raw costs of an episode; `average` is left at 0.
inline CostBreakdown episode_costs(const std::vector<Series>& consumptions, const MarketSeries& market,
                                   const TimeGrid& grid) {
  const Series district = district_of(consumptions);
  return {emission_cost(consumptions, market.carbon_intensity), price_cost(district, market.price),
          grid_cost(district, month_labels(grid)), 0.0};
}

/// Each component divided by the baseline's; average is their plain mean.
inline CostBreakdown normalize(const CostBreakdown& costs, const CostBreakdown& baseline) {
  if (!(baseline.emission > 0.0 && baseline.price > 0.0 && baseline.grid > 0.0))
    throw ContractError("baseline costs must be positive to normalise against");
  CostBreakdown n{costs.emission / baseline.emission, costs.price / baseline.price, costs.grid / baseline.grid, 0.0};
  n.average = (n.emission + n.price + n.grid) / 3.0;
  return n;
}

/// sum |a - p| / sum |a|.
inline double wmape(const Series& actual, const Series& predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("wmape needs aligned series");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    num += std::abs(actual[i] - predicted[i]);
    den += std::abs(actual[i]);
  }
  if (!(den > 0.0)) throw ContractError("wmape undefined for all-zero actuals");
  return num / den;
}

/// One normalised score row: controller, seed, scores.
struct SummaryRow {
  std::string controller;
  std::uint64_t seed = 0;
  CostBreakdown score;  // normalised
};

inline CsvWriter summary_csv(const std::vector<SummaryRow>& rows) {
  CsvWriter w({"controller", "seed", "average", "emission", "price", "grid"});
  for (const auto& r : rows)
    w.cell(r.controller).cell(static_cast<std::size_t>(r.seed)).cell(r.score.average).cell(r.score.emission)
        .cell(r.score.price).cell(r.score.grid).end_row();
  return w;
}

}  // namespace sofo::evaluate

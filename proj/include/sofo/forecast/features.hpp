#pragma once

// Inputs of the forecasting models.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/errors.hpp"

namespace sofo::forecast {

inline constexpr std::size_t kTimeFeatures = 6;

/// Cyclic calendar encoding of step t: (sin, cos) of hour-of-day,
/// day-of-week and month.
inline std::vector<double> time_features(const TimeGrid& grid, std::size_t t) {
  constexpr double tau = 2.0 * std::numbers::pi;
  const double h = tau * grid.hour_of_day(t) / 24.0;
  const double d = tau * grid.day_of_week(t) / 7.0;
  const double m = tau * grid.month_of_year(t) / 12.0;
  return {std::sin(h), std::cos(h), std::sin(d), std::cos(d), std::sin(m), std::cos(m)};
}

struct FeatureVector {
  std::vector<double> time_features;  // calendar encoding of the forecast origin
  std::vector<double> lag_features;   // y[t-K] .. y[t-1], oldest first
  std::vector<double> exogenous;      // aligned series at t-1, if any

  std::vector<double> flat() const {
    std::vector<double> out = time_features;
    out.insert(out.end(), lag_features.begin(), lag_features.end());
    out.insert(out.end(), exogenous.begin(), exogenous.end());
    return out;
  }
};

/// Features for a forecast issued at step t from observations strictly
/// before t. `history` and `exogenous` are indexed on the same grid.
inline FeatureVector build_features(const Series& history, const TimeGrid& grid, std::size_t t, std::size_t K,
                                    const std::vector<Series>& exogenous = {}) {
  if (K < 1) throw ContractError("lag window K must be >= 1");
  if (t < K || t > history.size())
    throw ContractError("build_features needs K = " + std::to_string(K) + " observations before t = " +
                        std::to_string(t) + " (history has " + std::to_string(std::min(t, history.size())) + ")");
  FeatureVector f;
  f.time_features = time_features(grid, t);
  f.lag_features.assign(history.begin() + static_cast<std::ptrdiff_t>(t - K),
                        history.begin() + static_cast<std::ptrdiff_t>(t));
  for (const auto& x : exogenous) {
    if (x.size() < t) throw ShapeError("exogenous series shorter than history");
    f.exogenous.push_back(x[t - 1]);
  }
  return f;
}

}  // namespace sofo::forecast

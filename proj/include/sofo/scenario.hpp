#pragma once

// Point forecasts with per-step uncertainty, and Gaussian scenario sampling.

#include <random>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/rng.hpp"
#include "sofo/serialize.hpp"

namespace sofo {

/// Forecast of the uncertain problem parameters over a horizon.
/// solar: [generator][t], load: [building][t], price: [t].
struct PointForecast {
  std::vector<Series> solar;
  std::vector<Series> load;
  Series price;

  std::size_t horizon() const { return price.size(); }
};

/// Per-step standard deviations with the same shape as PointForecast.
using ForecastSigma = PointForecast;

struct ScenarioSet {
  std::size_t n_scenarios = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Series>> solar;  // [n][generator][t]
  std::vector<std::vector<Series>> load;   // [n][building][t]
  std::vector<Series> price;               // [n][t]

  std::size_t horizon() const { return price.empty() ? 0 : price.front().size(); }
  bool operator==(const ScenarioSet&) const = default;
};

namespace detail {

inline void check_shape(const std::vector<Series>& a, const std::vector<Series>& b, std::size_t T,
                        const char* what) {
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": forecast/uncertainty count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != T || b[i].size() != T)
      throw ShapeError(std::string(what) + ": series length differs from horizon");
}

}  // namespace detail

/// Scenario n, step t of each target is mean + sigma * z with independent
/// standard normal z; negative draws are truncated to zero. Scenario n uses
/// its own substream derived from (seed, n).
inline ScenarioSet sample_scenarios(const PointForecast& mean, const ForecastSigma& sigma, std::size_t N,
                                    std::uint64_t seed) {
  if (N == 0) throw ContractError("scenario count must be >= 1");
  const std::size_t T = mean.horizon();
  if (sigma.price.size() != T) throw ShapeError("price: series length differs from horizon");
  detail::check_shape(mean.solar, sigma.solar, T, "solar");
  detail::check_shape(mean.load, sigma.load, T, "load");

  ScenarioSet out;
  out.n_scenarios = N;
  out.seed = seed;
  out.solar.resize(N);
  out.load.resize(N);
  out.price.resize(N);
  std::normal_distribution<double> z(0.0, 1.0);
  auto draw = [&](Rng& rng, const Series& m, const Series& s) {
    Series v(T);
    for (std::size_t t = 0; t < T; ++t) {
      const double e = z(rng);
      v[t] = std::max(0.0, m[t] + s[t] * e);
    }
    return v;
  };
  for (std::size_t n = 0; n < N; ++n) {
    Rng rng(derive_seed(seed, {n}));
    z.reset();
    for (std::size_t g = 0; g < mean.solar.size(); ++g) out.solar[n].push_back(draw(rng, mean.solar[g], sigma.solar[g]));
    for (std::size_t b = 0; b < mean.load.size(); ++b) out.load[n].push_back(draw(rng, mean.load[b], sigma.load[b]));
    out.price[n] = draw(rng, mean.price, sigma.price);
  }
  return out;
}

/// (scenario, target, step, value) rows; target is "solar:<g>", "load:<b>"
/// or "price".
inline CsvWriter scenarios_csv(const ScenarioSet& s) {
  CsvWriter w({"scenario", "target", "step", "value"});
  for (std::size_t n = 0; n < s.n_scenarios; ++n) {
    for (std::size_t g = 0; g < s.solar[n].size(); ++g)
      for (std::size_t t = 0; t < s.solar[n][g].size(); ++t)
        w.cell(n).cell("solar:" + std::to_string(g)).cell(t).cell(s.solar[n][g][t]).end_row();
    for (std::size_t b = 0; b < s.load[n].size(); ++b)
      for (std::size_t t = 0; t < s.load[n][b].size(); ++t)
        w.cell(n).cell("load:" + std::to_string(b)).cell(t).cell(s.load[n][b][t]).end_row();
    for (std::size_t t = 0; t < s.price[n].size(); ++t) w.cell(n).cell("price").cell(t).cell(s.price[n][t]).end_row();
  }
  return w;
}

}  // namespace sofo

#include <gtest/gtest.h>

#include <random>

#include "sofo/evaluate.hpp"
#include "sofo/rng.hpp"

using namespace sofo;
using namespace sofo::evaluate;

TEST(EmissionCost, FloorsPerBuilding) {
  EXPECT_EQ(emission_cost({{2.0}, {-1.0}}, {1.0}), 2.0);
  EXPECT_EQ(emission_cost({{-2.0, -0.5}, {-1.0, 0.0}}, {1.0, 3.0}), 0.0);
  EXPECT_THROW(emission_cost({{1.0, 2.0}}, {1.0}), ShapeError);
}

// Fixed draw of 3 buildings x 2 steps, summed term by term.
TEST(EmissionCost, MatchesHandRecomputation) {
  Rng rng(77);
  std::uniform_real_distribution<double> u(-2.0, 3.0), c(0.1, 1.0);
  std::vector<Series> E(3, Series(2));
  for (auto& b : E)
    for (auto& v : b) v = u(rng);
  Series carbon = {c(rng), c(rng)};
  double hand = 0.0;
  for (int t = 0; t < 2; ++t) {
    double pos = 0.0;
    for (int i = 0; i < 3; ++i)
      if (E[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] > 0)
        pos += E[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    hand += pos * carbon[static_cast<std::size_t>(t)];
  }
  EXPECT_NEAR(emission_cost(E, carbon), hand, 1e-15);
}

TEST(PriceCost, FloorsAtDistrictLevel) {
  const std::vector<Series> E = {{2.0}, {-1.0}};
  EXPECT_EQ(price_cost(district_of(E), {1.0}), 1.0);
  EXPECT_EQ(emission_cost(E, {1.0}), 2.0);
  EXPECT_EQ(price_cost(Series(10, 5.0), Series(10, 2.0)), 100.0);
  EXPECT_THROW(price_cost({1.0}, {1.0, 2.0}), ShapeError);
}

TEST(GridCost, HandValues) {
  EXPECT_EQ(grid_cost(Series(5, 3.0), std::vector<long>(5, 0)), 0.5);
  EXPECT_EQ(grid_cost({0.0, 4.0}, {0, 0}), 2.25);
  EXPECT_EQ(load_factor(Series(6, 2.0), {0, 0, 0, 1, 1, 1}), 2.0);
  EXPECT_THROW(grid_cost({1.0}, {0}), ContractError);
  EXPECT_THROW(load_factor({1.0, 1.0}, {1, 0}), ContractError);
}

TEST(GridCost, NonPositiveMonthCountsAsOne) {
  EXPECT_EQ(load_factor({0.0, 0.0, -1.0}, {0, 0, 0}), 1.0);
  // Export contributes to ramping at full magnitude.
  EXPECT_EQ(ramping({1.0, -2.0, 1.0}), 6.0);
}

TEST(Normalize, Arithmetic) {
  CostBreakdown base{100.0, 100.0, 100.0};
  auto n = normalize({50.0, 40.0, 30.0}, base);
  EXPECT_DOUBLE_EQ(n.emission, 0.5);
  EXPECT_DOUBLE_EQ(n.price, 0.4);
  EXPECT_DOUBLE_EQ(n.grid, 0.3);
  EXPECT_DOUBLE_EQ(n.average, 0.4);
  auto self = normalize(base, base);
  EXPECT_EQ(self, (CostBreakdown{1.0, 1.0, 1.0, 1.0}));
  EXPECT_THROW(normalize(base, {0.0, 1.0, 1.0}), ContractError);
}

// Column order follows the reference table: average, emission, price, grid.
TEST(Normalize, SummaryLayout) {
  CostBreakdown s{0.911, 0.796, 0.881, 0.862};
  auto csv = summary_csv({{"SOFO", 0, s}}).str();
  EXPECT_EQ(csv, "controller,seed,average,emission,price,grid\nSOFO,0,0.862,0.911,0.796,0.881\n");
}

TEST(Wmape, Values) {
  EXPECT_EQ(wmape({1.0, 2.0}, {1.0, 2.0}), 0.0);
  EXPECT_NEAR(wmape({10.0, 10.0}, {9.0, 11.0}), 0.10, 1e-15);
  EXPECT_NEAR(wmape({30.0, 30.0}, {27.0, 33.0}), wmape({10.0, 10.0}, {9.0, 11.0}), 1e-15);
  EXPECT_THROW(wmape({0.0, 0.0}, {1.0, 1.0}), ContractError);
}

TEST(Properties, PerBuildingFlooringDominates) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-3.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<Series> E(3, Series(4));
    for (auto& b : E)
      for (auto& v : b) v = u(rng);
    EXPECT_GE(emission_cost(E, Series(4, 1.0)), price_cost(district_of(E), Series(4, 1.0)) - 1e-12);
  }
}

TEST(Properties, AppendingZeroStepsKeepsEmissionAndPrice) {
  std::vector<Series> E = {{1.0, -2.0, 3.0}, {0.5, 0.5, -1.0}};
  Series c = {0.3, 0.4, 0.5};
  auto E2 = E;
  for (auto& b : E2) b.push_back(0.0);
  Series c2 = c;
  c2.push_back(0.9);
  EXPECT_EQ(emission_cost(E, c), emission_cost(E2, c2));
  EXPECT_EQ(price_cost(district_of(E), c), price_cost(district_of(E2), c2));
}

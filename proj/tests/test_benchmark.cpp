#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sofo/benchmark.hpp"

using namespace sofo;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(const std::string& out) {
  RunConfig r;
  r.synthetic.days = 7;
  r.synthetic.seed = 12;
  r.split = {72, 120, 168};
  r.seeds = {0};
  r.controller.n_scenarios = 5;
  r.sweep_scenarios = {1, 5};
  r.sweep_seeds = {0, 1};
  r.schemes = {"noft", "smalllr"};
  r.threads = 2;
  r.out = out;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sofo_bench_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  auto r = drift_benchmark();
  r.controller.epsilon = 0.2;
  r.dataset = "data/x";
  r.controller.scheme.kind = forecast::SchemeKind::Freeze;
  const Json j = r;
  const auto back = j.get<RunConfig>();
  EXPECT_EQ(back, r);
  EXPECT_EQ(Json(back).dump(), j.dump());
  EXPECT_EQ(Json::parse("{}").get<RunConfig>(), RunConfig{});
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(Json::parse(R"({"seed": [1]})").get<RunConfig>(), ContractError);
  EXPECT_THROW(Json::parse(R"({"controller": {"horizon": 24}})").get<RunConfig>(), ContractError);
  const auto scheme = Json::parse(R"({"controller": {"scheme": "small-lr"}})").get<RunConfig>();
  EXPECT_EQ(scheme.controller.scheme.kind, forecast::SchemeKind::SmallLR);

  RunConfig r;
  EXPECT_NO_THROW(r.validate());
  r.controllers = {"DQN"};
  EXPECT_THROW(r.validate(), ContractError);
  r = {};
  r.split = {400, 300, 720};
  EXPECT_THROW(r.validate(), ContractError);
  r = {};
  r.split.control_end = 24 * 30 + 1;
  EXPECT_THROW(r.validate(), ContractError);
  r = {};
  r.seeds.clear();
  EXPECT_THROW(r.validate(), ContractError);
  EXPECT_THROW(read_run_config("/nonexistent/config.json"), ParseError);
}

TEST(Benchmark, DeduplicatesEpisodes) {
  const auto rows = bench::detail::plan_rows(small_run("unused"));
  std::set<bench::Job> jobs;
  for (const auto& r : rows) jobs.insert(r.job);
  // NoStorage, RBC, MPC, AMPC, +rolling, +stochastic (also the noft scheme
  // row), SOFO(N=5, seed 0), SOFO(N=1, seeds 0 and 1), SOFO(N=5, seed 1).
  EXPECT_EQ(jobs.size(), 10u);
  EXPECT_EQ(rows.size(), 1u + 5u + 4u + 4u + 2u);
}

TEST(Benchmark, SevenDaySummaryAndFiles) {
  const auto dir = scratch("summary");
  const auto res = bench::run_benchmark(small_run(dir.string()));
  ASSERT_EQ(res.status, 0) << (res.errors.empty() ? "" : res.errors.front());
  ASSERT_EQ(res.summary.size(), 5u);
  EXPECT_EQ(res.summary[0].controller, "NoStorage");
  EXPECT_EQ(res.summary[0].score, (evaluate::CostBreakdown{1.0, 1.0, 1.0, 1.0}));
  for (const auto& r : res.summary) EXPECT_GT(r.score.average, 0.0) << r.controller;
  for (const auto& f : res.feasibility) EXPECT_TRUE(f.ok());
  EXPECT_EQ(res.components.size(), 4u);
  EXPECT_EQ(res.components.back().score, res.summary.back().score);  // +fine-tuning is SOFO
  EXPECT_EQ(res.sweep.size(), 4u);
  EXPECT_EQ(res.online_update_seconds.count("noft"), 1u);
  EXPECT_EQ(res.online_update_seconds.at("noft"), 0.0);

  for (const char* f : {"summary.csv", "costs.csv", "components.csv", "scenario_sweep.csv", "scenario_runs.csv",
                        "update_schemes.csv", "forecast_wmape.csv", "report.md", "runtime.json", "config.json",
                        "summary.svg", "components.svg", "scenario_sweep.svg", "update_schemes.svg",
                        "trajectories/SOFO_seed0.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto summary = read_csv((dir / "summary.csv").string());
  EXPECT_EQ(summary.header, (std::vector<std::string>{"controller", "seed", "average", "emission", "price", "grid"}));
  EXPECT_EQ(summary.rows[0], (std::vector<std::string>{"NoStorage", "0", "1", "1", "1", "1"}));
  EXPECT_NE(slurp(dir / "report.md").find("unweighted mean"), std::string::npos);
  EXPECT_EQ(read_run_config((dir / "config.json").string()), small_run(dir.string()));

  // Re-rendering from the CSVs reproduces the plots.
  const auto svg = slurp(dir / "summary.svg");
  fs::remove(dir / "summary.svg");
  const auto written = bench::render_plots(dir.string());
  EXPECT_EQ(written.size(), 4u);
  EXPECT_EQ(slurp(dir / "summary.svg"), svg);
  fs::remove_all(dir);
}

TEST(Benchmark, RepeatedRunsAreByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = small_run(a.string());
  cfg.sweep_scenarios.clear();
  cfg.controllers = {"NoStorage", "SOFO"};
  cfg.components = false;
  ASSERT_EQ(bench::run_benchmark(cfg).status, 0);
  cfg.out = b.string();
  cfg.threads = 1;
  ASSERT_EQ(bench::run_benchmark(cfg).status, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    if (rel == "runtime.json" || rel == "config.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 8u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Benchmark, FaultGivesNonzeroStatusAndKeepsResults) {
  const auto dir = scratch("fault");
  fs::create_directories(dir.parent_path());
  { std::ofstream(dir.string()) << "not a directory"; }
  auto cfg = small_run(dir.string());
  cfg.controllers = {"NoStorage", "RBC"};
  cfg.components = false;
  cfg.sweep_scenarios.clear();
  cfg.schemes.clear();
  const auto res = bench::run_benchmark(cfg);
  EXPECT_EQ(res.status, 1);
  EXPECT_EQ(res.summary.size(), 2u);
  ASSERT_FALSE(res.errors.empty());
  EXPECT_EQ(res.errors.front().rfind("output:", 0), 0u);
  fs::remove(dir);
}

TEST(SweepPoints, MeanAndSampleStd) {
  std::vector<std::pair<std::size_t, evaluate::SummaryRow>> rows;
  for (double v : {1.0, 3.0}) rows.push_back({10, {"SOFO", 0, {0, 0, 0, v}}});
  rows.push_back({5, {"SOFO", 0, {0, 0, 0, 2.0}}});
  const auto p = bench::sweep_points(rows);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].n_scenarios, 10u);
  EXPECT_EQ(p[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(p[0].std, std::sqrt(2.0));
  EXPECT_EQ(p[1].std, 0.0);
  EXPECT_EQ(p[1].runs, 1u);
}

TEST(Plot, ChartsValidateShapes) {
  EXPECT_THROW(plot::bar_chart("t", "y", {"a", "b"}, {{"g", {1.0}}}), ShapeError);
  EXPECT_THROW(plot::line_chart("t", "x", "y", {1.0, 2.0}, {{"l", {1.0}, {}}}), ShapeError);
  const auto svg = plot::line_chart("a<b", "x", "y", {1.0, 2.0}, {{"l", {1.0, 0.5}, {0.1, 0.1}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
}

// sofo: validate configs and datasets, generate synthetic data, train
// forecasters, issue a single dispatch plan, run the benchmark grid and
// re-render its plots.
//
// Log verbosity comes from SOFO_LOG: 0 errors only, 1 progress (default),
// 2 per-episode detail.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sofo/benchmark.hpp"

using namespace sofo;

namespace {

struct Args {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::vector<std::string> controllers;
  std::size_t scenarios = 0;
  std::string scheme;
};

int log_level() {
  const char* v = std::getenv("SOFO_LOG");
  return v ? std::atoi(v) : 1;
}

void log(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "[sofo] " << msg << "\n";
}

RunConfig resolve(const Args& a) {
  RunConfig cfg = a.config.empty() ? drift_benchmark() : read_run_config(a.config);
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  if (!a.out.empty()) cfg.out = a.out;
  if (!a.controllers.empty()) cfg.controllers = a.controllers;
  if (a.scenarios) cfg.controller.n_scenarios = a.scenarios;
  if (!a.scheme.empty()) cfg.controller.scheme.kind = forecast::parse_scheme(a.scheme);
  cfg.validate();
  return cfg;
}

ProblemInstance checked_instance(const RunConfig& cfg) {
  auto inst = load_instance(cfg);
  if (auto v = validate_instance(inst); !v.empty()) {
    for (const auto& e : v) std::cerr << e.path << ": " << e.message << "\n";
    throw ContractError("dataset failed validation (" + std::to_string(v.size()) + " violations)");
  }
  cfg.validate(inst.horizon());
  return inst;
}

int cmd_validate(const Args& a) {
  const auto cfg = resolve(a);
  const auto inst = checked_instance(cfg);
  std::cout << "ok: " << inst.horizon() << " steps, " << inst.buildings.size() << " buildings, "
            << inst.storages.size() << " storages, " << inst.generators.size() << " generators\n";
  return 0;
}

int cmd_generate(const Args& a) {
  auto cfg = resolve(a);
  if (!a.seeds.empty()) cfg.synthetic.seed = a.seeds.front();
  const auto inst = data::generate_synthetic(cfg.synthetic);
  data::write_dataset(inst, cfg.out);
  std::cout << "wrote " << inst.horizon() << " steps to " << cfg.out << "\n";
  return 0;
}

int cmd_forecast(const Args& a) {
  const auto cfg = resolve(a);
  const auto inst = checked_instance(cfg);
  const auto& c = cfg.controller;
  const auto pre = control::pretrain(inst, cfg.split, c.forecast, c.model_seed, c.horizon_T);
  const auto trace = control::build_trace(inst, cfg.split, c.trace_config(), &pre);
  const auto targets = control::target_series(inst);
  CsvWriter w({"target", "validation_wmape", "control_wmape", "updates"});
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::size_t updates = 0;
    for (const auto& ev : trace.fine_tunes) updates += ev.target == targets[i].name;
    const auto& t = trace.targets[i];
    w.cell(targets[i].name).cell(pre.validation_wmape[i])
        .cell(control::detail::wmape_or_zero(t.actual_h0, t.predicted_h0)).cell(updates).end_row();
  }
  std::filesystem::create_directories(cfg.out);
  w.save((std::filesystem::path(cfg.out) / "forecast.csv").string());
  std::cout << w.str();
  log(1, "pre-training " + bench::detail::fixed(pre.seconds, 2) + " s, scheme " +
             forecast::to_string(c.scheme.kind));
  return 0;
}

int cmd_dispatch(const Args& a) {
  const auto cfg = resolve(a);
  const auto inst = checked_instance(cfg);
  const std::string name = a.controllers.empty() ? "SOFO" : a.controllers.front();
  control::Planner planner;
  if (name == "SOFO") planner = control::Planner::stochastic;
  else if (name == "MPC" || name == "AMPC") planner = control::Planner::deterministic;
  else throw ContractError("dispatch plans with SOFO or MPC, not '" + name + "'");
  auto c = cfg.controller;
  c.seed = cfg.seeds.front();
  const auto r = control::plan_once(inst, cfg.split, c, planner);
  if (r.status != lp::Status::optimal) {
    std::cerr << "LP " << lp::to_string(r.status) << "\n";
    return 1;
  }
  std::filesystem::create_directories(cfg.out);
  const auto path = (std::filesystem::path(cfg.out) / "plan.json").string();
  std::ofstream(path) << encode(r.plan) << "\n";
  std::cout << name << " plan for steps " << cfg.split.val_end << ".." << cfg.split.val_end + r.plan.p_grid.size() - 1
            << ": objective " << format_double(r.objective) << ", forecast " << bench::detail::fixed(r.forecast_seconds, 3)
            << " s, solve " << bench::detail::fixed(r.solve_seconds, 3) << " s -> " << path << "\n";
  return 0;
}

int cmd_benchmark(const Args& a) {
  const auto cfg = resolve(a);
  const auto res = bench::run_benchmark(cfg, log);
  std::cout << std::ifstream(std::filesystem::path(cfg.out) / "report.md").rdbuf();
  return res.status;
}

int cmd_report(const Args& a) {
  const std::string out = a.out.empty() ? (a.config.empty() ? "out" : read_run_config(a.config).out) : a.out;
  const auto written = bench::render_plots(out);
  if (written.empty()) {
    std::cerr << "no benchmark CSVs found in " << out << "\n";
    return 1;
  }
  for (const auto& f : written) std::cout << (std::filesystem::path(out) / f).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-based dispatch with online forecast fine-tuning"};
  app.require_subcommand(1);
  Args args;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "RunConfig JSON (default: the 30-day drift benchmark)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seeds, "seed list, e.g. 0,1,2")->delimiter(',');
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--controller", args.controllers, "NoStorage|RBC|MPC|AMPC|SOFO (repeatable)")->delimiter(',');
    sub->add_option("--scenarios", args.scenarios, "scenario count N")->check(CLI::PositiveNumber);
    sub->add_option("--scheme", args.scheme, "noft|selfadapt|scratch|smalllr|freeze");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Args&);
  };
  const Command commands[] = {
      {"validate", "check a config and its dataset", cmd_validate},
      {"generate", "write the synthetic dataset as CSV files", cmd_generate},
      {"forecast", "pre-train the forecasters and report WMAPE", cmd_forecast},
      {"dispatch", "issue one plan at the start of the control window", cmd_dispatch},
      {"benchmark", "run the full controller grid", cmd_benchmark},
      {"report", "re-render plots from benchmark CSVs", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    common(sub);
    subs.emplace_back(sub, &c);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& [sub, c] : subs)
      if (sub->parsed()) return c->run(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

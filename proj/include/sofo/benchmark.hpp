#pragma once

// Benchmark orchestration: the controller grid, the component ablation, the
// scenario-count sweep and the update-scheme ablation, fanned out over worker
// threads, then written as CSV, SVG and markdown.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "sofo/config.hpp"
#include "sofo/plot.hpp"

namespace sofo::bench {

using control::EpisodeResult;
using control::Planner;
using forecast::SchemeKind;

/// One episode of the grid. Episodes that differ only in fields their
/// planner ignores share a key and run once.
struct Job {
  Planner planner = Planner::idle;
  SchemeKind scheme = SchemeKind::NoFt;
  std::size_t T_rl = 1;
  std::size_t n_scenarios = 0;
  std::uint64_t seed = 0;

  auto key() const {
    const bool planned = planner == Planner::deterministic || planner == Planner::stochastic;
    const bool sampled = planner == Planner::stochastic;
    return std::make_tuple(static_cast<int>(planner), planned ? static_cast<int>(scheme) : 0, planned ? T_rl : 0,
                           sampled ? n_scenarios : 0, sampled ? seed : 0);
  }
  bool operator<(const Job& o) const { return key() < o.key(); }
};

struct JobOutcome {
  std::optional<EpisodeResult> result;
  std::string error;
  double seconds = 0.0;
};

struct Row {
  std::string group;  // "summary", "components", "sweep", "schemes"
  std::string label;
  std::uint64_t seed = 0;
  std::size_t n_scenarios = 0;
  Job job;
};

struct BenchmarkResult {
  int status = 0;  // 0 iff every episode completed and every file was written
  std::vector<std::string> errors;
  std::vector<evaluate::SummaryRow> summary, components, schemes;
  std::vector<std::pair<std::size_t, evaluate::SummaryRow>> sweep;  // (N, row)
  std::vector<control::FeasibilityReport> feasibility;              // one per executed episode
  std::map<std::string, double> online_update_seconds;             // per scheme
  double seconds = 0.0;
};

using Logger = std::function<void(int level, const std::string&)>;

namespace detail {

inline std::string label_of(Planner p) {
  switch (p) {
    case Planner::idle: return "NoStorage";
    case Planner::rule: return "RBC";
    case Planner::deterministic: return "MPC";
    default: return "SOFO";
  }
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::vector<Row> plan_rows(const RunConfig& cfg) {
  const auto& c = cfg.controller;
  const std::size_t day_ahead = std::min<std::size_t>(24, c.horizon_T);
  const Job sofo{Planner::stochastic, c.scheme.kind, c.T_rl, c.n_scenarios, 0};
  std::vector<Row> rows;
  auto add = [&](const std::string& group, const std::string& label, Job job, std::uint64_t seed) {
    job.seed = seed;
    rows.push_back({group, label, seed, job.n_scenarios, job});
  };
  for (auto seed : cfg.seeds) add("baseline", "NoStorage", {Planner::idle}, seed);
  for (const auto& name : cfg.controllers)
    for (auto seed : cfg.seeds) {
      if (name == "NoStorage") add("summary", name, {Planner::idle}, seed);
      else if (name == "RBC") add("summary", name, {Planner::rule}, seed);
      else if (name == "MPC") add("summary", name, {Planner::deterministic, SchemeKind::NoFt, day_ahead}, seed);
      else if (name == "AMPC") add("summary", name, {Planner::deterministic, SchemeKind::SelfAdapt, 1}, seed);
      else add("summary", name, sofo, seed);
    }
  if (cfg.components)
    for (auto seed : cfg.seeds) {
      add("components", "MPC", {Planner::deterministic, SchemeKind::NoFt, day_ahead}, seed);
      add("components", "+rolling", {Planner::deterministic, SchemeKind::NoFt, c.T_rl}, seed);
      add("components", "+stochastic", {Planner::stochastic, SchemeKind::NoFt, c.T_rl, c.n_scenarios}, seed);
      add("components", "+fine-tuning", sofo, seed);
    }
  for (auto n : cfg.sweep_scenarios)
    for (auto seed : cfg.sweep_seeds) {
      Job j = sofo;
      j.n_scenarios = n;
      add("sweep", "SOFO", j, seed);
    }
  for (const auto& s : cfg.schemes)
    for (auto seed : cfg.seeds) {
      Job j = sofo;
      j.scheme = forecast::parse_scheme(s);
      add("schemes", forecast::to_string(j.scheme), j, seed);
    }
  return rows;
}

/// Runs fn(i) for i in [0, n) on `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline CsvWriter score_csv(const std::string& first, const std::vector<evaluate::SummaryRow>& rows) {
  CsvWriter w({first, "seed", "average", "emission", "price", "grid"});
  for (const auto& r : rows)
    w.cell(r.controller).cell(static_cast<std::size_t>(r.seed)).cell(r.score.average).cell(r.score.emission)
        .cell(r.score.price).cell(r.score.grid).end_row();
  return w;
}

/// Mean score per label, in first-appearance order.
inline std::vector<std::pair<std::string, evaluate::CostBreakdown>> means(
    const std::vector<evaluate::SummaryRow>& rows) {
  std::vector<std::pair<std::string, evaluate::CostBreakdown>> out;
  std::vector<std::size_t> counts;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.controller; });
    if (it == out.end()) {
      out.push_back({r.controller, {}});
      counts.push_back(0);
      it = out.end() - 1;
    }
    auto& m = it->second;
    m.average += r.score.average;
    m.emission += r.score.emission;
    m.price += r.score.price;
    m.grid += r.score.grid;
    ++counts[static_cast<std::size_t>(it - out.begin())];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = static_cast<double>(counts[i]);
    auto& m = out[i].second;
    m.average /= n;
    m.emission /= n;
    m.price /= n;
    m.grid /= n;
  }
  return out;
}

inline std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Mean and sample standard deviation of the SOFO average score per N.
struct SweepPoint {
  std::size_t n_scenarios = 0;
  double mean = 0.0, std = 0.0;
  std::size_t runs = 0;
};

inline std::vector<SweepPoint> sweep_points(const std::vector<std::pair<std::size_t, evaluate::SummaryRow>>& rows) {
  std::vector<SweepPoint> out;
  std::map<std::size_t, std::vector<double>> by_n;
  std::vector<std::size_t> order;
  for (const auto& [n, r] : rows) {
    if (!by_n.count(n)) order.push_back(n);
    by_n[n].push_back(r.score.average);
  }
  for (auto n : order) out.push_back({n, detail::mean(by_n[n]), detail::stddev(by_n[n]), by_n[n].size()});
  return out;
}

/// Renders every SVG from the CSVs present in `out`.
inline std::vector<std::string> render_plots(const std::string& out) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  const std::vector<std::string> metrics{"average", "emission", "price", "grid"};
  auto bars = [&](const std::string& csv, const std::string& svg, const std::string& title) {
    const auto path = fs::path(out) / csv;
    if (!fs::exists(path)) return;
    const auto t = read_csv(path.string());
    std::vector<evaluate::SummaryRow> rows;
    for (const auto& r : t.rows) {
      evaluate::SummaryRow s;
      s.controller = r[0];
      double v[4];
      for (std::size_t m = 0; m < 4; ++m) {
        const int col = t.column(metrics[m]);
        if (col < 0 || !parse_double(r[static_cast<std::size_t>(col)], v[m]))
          throw ParseError(path.string(), -1, "bad " + metrics[m] + " column");
      }
      s.score = {v[1], v[2], v[3], v[0]};
      rows.push_back(s);
    }
    if (rows.empty()) return;
    std::vector<plot::BarGroup> groups;
    for (const auto& [label, m] : detail::means(rows)) groups.push_back({label, {m.average, m.emission, m.price, m.grid}});
    detail::write_text(fs::path(out) / svg, plot::bar_chart(title, "normalised cost (no storage = 1)", metrics, groups));
    written.push_back(svg);
  };
  bars("summary.csv", "summary.svg", "Controller comparison");
  bars("components.csv", "components.svg", "Component ablation");
  bars("update_schemes.csv", "update_schemes.svg", "Online update schemes");

  const auto sweep = fs::path(out) / "scenario_sweep.csv";
  if (fs::exists(sweep)) {
    const auto t = read_csv(sweep.string());
    std::vector<double> x;
    plot::Line line{"SOFO average", {}, {}};
    for (const auto& r : t.rows) {
      double n = 0, m = 0, s = 0;
      if (!parse_double(r[0], n) || !parse_double(r[1], m) || !parse_double(r[2], s))
        throw ParseError(sweep.string(), -1, "bad sweep row");
      x.push_back(n);
      line.y.push_back(m);
      line.err.push_back(s);
    }
    if (!x.empty()) {
      detail::write_text(fs::path(out) / "scenario_sweep.svg",
                         plot::line_chart("Scenario count sweep (mean and std over seeds)", "scenarios N",
                                          "normalised average cost", x, {line}));
      written.push_back("scenario_sweep.svg");
    }
  }
  return written;
}

/// Runs the full grid named by `cfg` and writes its outputs to cfg.out.
inline BenchmarkResult run_benchmark(const RunConfig& cfg, const Logger& log = {}) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  auto say = [&](int level, const std::string& msg) {
    if (log) log(level, msg);
  };
  cfg.validate();
  const auto inst = load_instance(cfg);
  if (auto v = validate_instance(inst); !v.empty())
    throw ContractError("dataset invalid: " + v.front().path + ": " + v.front().message);
  cfg.validate(inst.horizon());

  BenchmarkResult out;
  const auto rows = detail::plan_rows(cfg);
  std::vector<Job> jobs;
  std::map<Job, std::size_t> job_index;
  std::set<SchemeKind> schemes_needed;
  for (const auto& r : rows) {
    if (job_index.emplace(r.job, jobs.size()).second) jobs.push_back(r.job);
    if (r.job.planner == Planner::deterministic || r.job.planner == Planner::stochastic)
      schemes_needed.insert(r.job.scheme);
  }
  say(1, std::to_string(rows.size()) + " result rows, " + std::to_string(jobs.size()) + " distinct episodes");

  const std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());

  // Forecast traces: one pre-training, then one online pass per scheme.
  const auto& c = cfg.controller;
  std::optional<control::Pretrained> pre;
  const auto pre_clock = clock::now();
  std::string pretrain_error;
  if (!schemes_needed.empty() && !c.oracle) {
    try {
      pre = control::pretrain(inst, cfg.split, c.forecast, c.model_seed, c.horizon_T);
    } catch (const std::exception& e) {
      pretrain_error = e.what();
      out.errors.push_back(std::string("pre-training: ") + e.what());
    }
  }
  const double pretrain_seconds = control::detail::seconds_since(pre_clock);
  const std::vector<SchemeKind> scheme_list(schemes_needed.begin(), schemes_needed.end());
  std::vector<std::optional<control::ForecastTrace>> traces(scheme_list.size());
  std::vector<std::string> trace_errors(scheme_list.size());
  std::vector<double> trace_seconds(scheme_list.size());
  detail::parallel_for(scheme_list.size(), threads, [&](std::size_t i) {
    const auto t0 = clock::now();
    if (!pretrain_error.empty()) {
      trace_errors[i] = "no pre-trained models";
      return;
    }
    try {
      auto tc = c.trace_config();
      tc.scheme.kind = scheme_list[i];
      traces[i] = control::build_trace(inst, cfg.split, tc, pre ? &*pre : nullptr);
    } catch (const std::exception& e) {
      trace_errors[i] = e.what();
    }
    trace_seconds[i] = control::detail::seconds_since(t0);
  });
  std::map<SchemeKind, const control::ForecastTrace*> trace_of;
  for (std::size_t i = 0; i < scheme_list.size(); ++i) {
    const auto name = forecast::to_string(scheme_list[i]);
    if (traces[i]) {
      trace_of[scheme_list[i]] = &*traces[i];
      double s = 0.0;
      for (const auto& ev : traces[i]->fine_tunes) s += ev.seconds;
      out.online_update_seconds[name] = s;
      say(2, "trace " + name + ": " + std::to_string(traces[i]->fine_tunes.size()) + " updates");
    } else {
      out.errors.push_back("forecast trace " + name + ": " + trace_errors[i]);
    }
  }

  // Episodes.
  std::vector<JobOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  detail::parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto t0 = clock::now();
    try {
      const control::ForecastTrace* trace = nullptr;
      if (job.planner == Planner::deterministic || job.planner == Planner::stochastic) {
        auto it = trace_of.find(job.scheme);
        if (it == trace_of.end()) throw std::runtime_error("forecast trace unavailable");
        trace = it->second;
      }
      auto ctl = c;
      ctl.seed = job.seed;
      ctl.n_scenarios = std::max<std::size_t>(1, job.n_scenarios);
      const auto opt = control::options_for(detail::label_of(job.planner), job.planner, ctl, job.T_rl);
      outcomes[i].result = control::run_episode(inst, cfg.split, opt, trace);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
    outcomes[i].seconds = control::detail::seconds_since(t0);
    const std::size_t k = ++done;
    std::lock_guard lock(log_mutex);
    say(2, "episode " + std::to_string(k) + "/" + std::to_string(jobs.size()) + " finished in " +
               detail::fixed(outcomes[i].seconds, 2) + " s");
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      const auto& j = jobs[i];
      out.errors.push_back("episode " + detail::label_of(j.planner) + " scheme=" + forecast::to_string(j.scheme) +
                           " T_rl=" + std::to_string(j.T_rl) + " N=" + std::to_string(j.n_scenarios) +
                           " seed=" + std::to_string(j.seed) + ": " + outcomes[i].error);
    } else {
      out.feasibility.push_back(control::check_feasibility(*outcomes[i].result, inst, c.perturb));
    }
  }

  // Scores, normalised by the no-storage episode.
  const EpisodeResult* baseline = outcomes[job_index.at(Job{Planner::idle})].result
                                      ? &*outcomes[job_index.at(Job{Planner::idle})].result
                                      : nullptr;
  for (const auto& r : rows) {
    if (r.group == "baseline") continue;
    const auto& o = outcomes[job_index.at(r.job)];
    if (!o.result || !baseline) continue;
    evaluate::SummaryRow s{r.label, r.seed, evaluate::normalize(o.result->costs, baseline->costs)};
    if (r.group == "summary") out.summary.push_back(s);
    else if (r.group == "components") out.components.push_back(s);
    else if (r.group == "schemes") out.schemes.push_back(s);
    else out.sweep.emplace_back(r.n_scenarios, s);
  }

  // Files.
  try {
    const fs::path dir(cfg.out);
    fs::create_directories(dir / "trajectories");
    detail::write_text(dir / "config.json", Json(cfg).dump(2) + "\n");
    evaluate::summary_csv(out.summary).save((dir / "summary.csv").string());

    CsvWriter raw({"controller", "seed", "emission", "price", "grid"});
    for (const auto& r : rows) {
      if (r.group != "summary" && r.group != "baseline") continue;
      if (r.group == "baseline" && std::count(cfg.controllers.begin(), cfg.controllers.end(), "NoStorage")) continue;
      const auto& o = outcomes[job_index.at(r.job)];
      if (!o.result) continue;
      raw.cell(r.label).cell(static_cast<std::size_t>(r.seed)).cell(o.result->costs.emission)
          .cell(o.result->costs.price).cell(o.result->costs.grid).end_row();
      fs::path traj = dir / "trajectories" / (r.label + "_seed" + std::to_string(r.seed) + ".csv");
      control::episode_csv(*o.result, inst).save(traj.string());
    }
    raw.save((dir / "costs.csv").string());

    if (cfg.components) detail::score_csv("variant", out.components).save((dir / "components.csv").string());
    if (!cfg.schemes.empty()) {
      CsvWriter w({"scheme", "seed", "average", "emission", "price", "grid", "updates"});
      for (const auto& s : out.schemes) {
        const auto it = trace_of.find(forecast::parse_scheme(s.controller));
        w.cell(s.controller).cell(static_cast<std::size_t>(s.seed)).cell(s.score.average).cell(s.score.emission)
            .cell(s.score.price).cell(s.score.grid).cell(it == trace_of.end() ? 0 : it->second->fine_tunes.size())
            .end_row();
      }
      w.save((dir / "update_schemes.csv").string());
    }
    if (!cfg.sweep_scenarios.empty()) {
      CsvWriter runs({"n_scenarios", "seed", "average", "emission", "price", "grid"});
      for (const auto& [n, s] : out.sweep)
        runs.cell(n).cell(static_cast<std::size_t>(s.seed)).cell(s.score.average).cell(s.score.emission)
            .cell(s.score.price).cell(s.score.grid).end_row();
      runs.save((dir / "scenario_runs.csv").string());
      CsvWriter w({"n_scenarios", "mean", "std", "runs"});
      for (const auto& p : sweep_points(out.sweep)) w.cell(p.n_scenarios).cell(p.mean).cell(p.std).cell(p.runs).end_row();
      w.save((dir / "scenario_sweep.csv").string());
    }

    CsvWriter wm({"scheme", "target", "wmape"});
    for (std::size_t i = 0; i < scheme_list.size(); ++i) {
      if (!traces[i]) continue;
      for (const auto& t : traces[i]->targets)
        wm.cell(forecast::to_string(scheme_list[i])).cell(t.name).cell(control::detail::wmape_or_zero(t.actual_h0, t.predicted_h0))
            .end_row();
    }
    wm.save((dir / "forecast_wmape.csv").string());

    render_plots(cfg.out);

    // Report: means only, so the file is as deterministic as the CSVs.
    std::ostringstream md;
    md << "# Benchmark report\n\n";
    md << "Scores are normalised by the no-storage episode (1.0 = batteries idle; lower is better). "
          "Values are means over seeds " ;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) md << (i ? ", " : "") << cfg.seeds[i];
    md << ".\n\n";
    auto table = [&](const std::string& title, const std::string& first, const std::vector<evaluate::SummaryRow>& rs) {
      if (rs.empty()) return;
      md << "## " << title << "\n\n| " << first << " | average[^avg] | emission | price | grid |\n|---|---|---|---|---|\n";
      for (const auto& [label, m] : detail::means(rs))
        md << "| " << label << " | " << detail::fixed(m.average) << " | " << detail::fixed(m.emission) << " | "
           << detail::fixed(m.price) << " | " << detail::fixed(m.grid) << " |\n";
      md << "\n";
    };
    table("Controllers", "controller", out.summary);
    table("Components", "variant", out.components);
    table("Update schemes", "scheme", out.schemes);
    if (!out.sweep.empty()) {
      md << "## Scenario count sweep\n\n| N | mean | std | runs |\n|---|---|---|---|\n";
      for (const auto& p : sweep_points(out.sweep))
        md << "| " << p.n_scenarios << " | " << detail::fixed(p.mean) << " | " << detail::fixed(p.std, 5) << " | "
           << p.runs << " |\n";
      md << "\n";
    }
    std::size_t steps = 0, soc_bad = 0, comp_bad = 0;
    for (const auto& f : out.feasibility) {
      steps += f.steps;
      soc_bad += f.soc_violations;
      comp_bad += f.complementarity_violations;
    }
    md << "## Feasibility\n\n" << out.feasibility.size() << " episodes, " << steps << " executed steps, " << soc_bad
       << " SOC bound violations, " << comp_bad << " complementarity violations.\n\n";
    if (!out.errors.empty()) {
      md << "## Failures\n\n";
      for (const auto& e : out.errors) md << "- " << e << "\n";
      md << "\n";
    }
    md << "[^avg]: The average is the unweighted mean of the three normalised components. Equal weighting is an "
          "assumption.\n";
    detail::write_text(dir / "report.md", md.str());

    out.seconds = control::detail::seconds_since(started);
    Json rt;
    rt["total_seconds"] = out.seconds;
    rt["threads"] = threads;
    rt["pretrain_seconds"] = pretrain_seconds;
    for (std::size_t i = 0; i < scheme_list.size(); ++i)
      rt["trace_seconds"][forecast::to_string(scheme_list[i])] = trace_seconds[i];
    rt["online_update_seconds"] = out.online_update_seconds;
    Json eps = Json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      Json e{{"planner", detail::label_of(jobs[i].planner)},
             {"scheme", forecast::to_string(jobs[i].scheme)},
             {"T_rl", jobs[i].T_rl},
             {"n_scenarios", jobs[i].n_scenarios},
             {"seed", jobs[i].seed},
             {"seconds", outcomes[i].seconds}};
      if (outcomes[i].result && !outcomes[i].result->dispatch_seconds.empty())
        e["mean_24h_dispatch_seconds"] = detail::mean(outcomes[i].result->dispatch_seconds);
      eps.push_back(e);
    }
    rt["episodes"] = eps;
    detail::write_text(dir / "runtime.json", rt.dump(2) + "\n");
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("output: ") + e.what());
  }

  out.seconds = control::detail::seconds_since(started);
  out.status = out.errors.empty() ? 0 : 1;
  for (const auto& e : out.errors) say(0, e);
  say(1, "benchmark finished in " + detail::fixed(out.seconds, 1) + " s, status " + std::to_string(out.status));
  return out;
}

}  // namespace sofo::bench

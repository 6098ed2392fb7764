// Acceptance gate: runs criteria 1-12 and prints one PASS/FAIL line each.
// With --strict the exit status is the number of failed criteria; otherwise
// it is nonzero only when the gate itself could not run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sofo/benchmark.hpp"
#include "sofo/forecast/recurrent.hpp"

using namespace sofo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int digits = 6) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

struct Gate {
  int id;
  std::string name;
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const Gate& g) {
  failures += !g.pass;
  std::cout << (g.pass ? "PASS" : "FAIL") << "  " << g.id << ". " << g.name << ": " << g.detail << std::endl;
}

template <class F>
Gate guarded(int id, const std::string& name, F&& body) {
  Gate g{id, name};
  try {
    body(g);
  } catch (const std::exception& e) {
    g.pass = false;
    g.detail += std::string(" exception: ") + e.what();
  }
  return g;
}

// --- 1 ---------------------------------------------------------------------
Gate lp_oracle() {
  return guarded(1, "LP solver vs vertex enumeration", [](Gate& g) {
    Rng rng(20240611);
    const auto t0 = Clock::now();
    int matched = 0;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const auto lp = testing::random_bounded_lp(rng);
      const auto oracle = testing::vertex_enumeration(lp);
      const auto sol = lp::solve_lp(lp);
      if (oracle && sol.status == lp::Status::optimal) {
        const double err = std::abs(sol.objective - *oracle);
        worst = std::max(worst, err);
        matched += err <= 1e-6;
      }
    }
    const double secs = since(t0);
    g.pass = matched == 50 && secs < 5.0;
    g.detail = std::to_string(matched) + "/50 within 1e-6 (worst " + num(worst, 3) + "), " + num(secs, 3) + " s";
  });
}

// --- 2 ---------------------------------------------------------------------
ProblemInstance random_instance(Rng& rng, std::size_t T) {
  std::uniform_real_distribution<double> load(0.5, 4.0), price(0.1, 0.6), solar(0.0, 3.0);
  std::vector<Series> loads(2, Series(T)), sol(2, Series(T));
  Series p(T);
  for (std::size_t t = 0; t < T; ++t) {
    p[t] = price(rng);
    for (std::size_t b = 0; b < 2; ++b) {
      loads[b][t] = load(rng);
      sol[b][t] = solar(rng);
    }
  }
  auto inst = testing::make_instance(loads, p, sol);
  testing::add_generator(inst, 0, 3.0);
  testing::add_generator(inst, 1, 3.0);
  testing::add_battery(inst, 0, 6.4, 5.0, 2.0);
  return inst;
}

Gate stochastic_collapse() {
  return guarded(2, "Stochastic LP with identical scenarios equals deterministic LP", [](Gate& g) {
    Rng rng(11);
    double worst = 0.0;
    int ok = 0;
    for (int k = 0; k < 10; ++k) {
      const auto inst = random_instance(rng, 24);
      const auto f = testing::perfect_forecast(inst);
      const auto det = lp::solve_lp(dispatch::build_deterministic(inst, f));
      const auto sto = lp::solve_lp(dispatch::build_stochastic(inst, testing::replicate(f, 5)));
      if (det.status != lp::Status::optimal || sto.status != lp::Status::optimal) continue;
      const double err = std::abs(det.objective - sto.objective);
      worst = std::max(worst, err);
      ok += err <= 1e-7;
    }
    g.pass = ok == 10;
    g.detail = std::to_string(ok) + "/10 within 1e-7 (worst " + num(worst, 3) + ")";
  });
}

// --- 3 ---------------------------------------------------------------------
Gate arbitrage() {
  return guarded(3, "Two-step battery arbitrage", [](Gate& g) {
    auto inst = testing::make_instance({{0.0, 5.0}}, {1.0, 10.0});
    testing::add_battery(inst, 0, 5.0, 5.0);
    const auto r = dispatch::solve_and_extract(dispatch::build_deterministic(inst, testing::perfect_forecast(inst)), inst);
    double brute = 1e300;
    for (int k = 0; k <= 500; ++k) {
      const double c = 0.01 * k;
      brute = std::min(brute, 1.0 * c + 10.0 * std::max(0.0, 5.0 - c));
    }
    g.pass = r.ok && r.solution.objective == 5.0 && std::abs(brute - 5.0) < 1e-12;
    g.detail = "LP objective " + num(r.solution.objective, 17) + ", grid search " + num(brute, 17);
  });
}

// --- 4 ---------------------------------------------------------------------
Gate gradient_check() {
  return guarded(4, "Recurrent net gradients vs central differences", [](Gate& g) {
    using namespace forecast;
    Rng rng(424242);
    std::uniform_int_distribution<std::size_t> dim(1, 5), hid(1, 8), len(1, 6);
    std::normal_distribution<double> n01(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const std::size_t I = dim(rng), H = hid(rng), O = dim(rng), S = len(rng);
      auto net = RecurrentNet::init(I, H, O, rng());
      for (auto& p : net.params) p *= 2.0;
      Matrix seq(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(I));
      for (Eigen::Index i = 0; i < seq.size(); ++i) seq.data()[i] = n01(rng);
      Vector target(static_cast<Eigen::Index>(O));
      for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = n01(rng);
      auto loss = [&](const std::vector<double>& p) {
        RecurrentNet m = net;
        m.params = p;
        return (forward(m, seq) - target).squaredNorm() / static_cast<double>(O);
      };
      ForwardCache cache;
      const Vector out = forward(net, seq, &cache);
      std::vector<double> grad(net.params.size(), 0.0);
      backward(net, seq, cache, (2.0 / static_cast<double>(O)) * (out - target), grad);
      for (std::size_t i = 0; i < net.params.size(); ++i) {
        const double fd = testing::central_difference(loss, net.params, i, 1e-5);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}));
      }
    }
    g.pass = worst < 1e-4;
    g.detail = "worst relative error " + num(worst, 3) + " over 20 nets";
  });
}

// --- 5 ---------------------------------------------------------------------
Gate perfect_information() {
  return guarded(5, "Perfect-information collapse", [](Gate& g) {
    data::SyntheticSpec spec;
    spec.days = 7;
    spec.seed = 12;
    const auto inst = data::generate_synthetic(spec);
    const control::Split split{48, 96, 168};
    control::ControllerConfig cfg;
    cfg.oracle = true;
    cfg.zero_sigma = true;
    cfg.horizon_T = split.control_steps();
    cfg.n_scenarios = 5;
    const double opt = control::clairvoyant_objective(inst, split);
    const auto sofo = control::run_sofo(inst, split, cfg);
    const auto mpc = control::run_mpc(inst, split, cfg, false);
    const double es = std::abs(sofo.costs.price - opt), em = std::abs(mpc.costs.price - opt);
    g.pass = es <= 1e-6 && em <= 1e-6;
    g.detail = "optimum " + num(opt, 10) + ", |SOFO - opt| " + num(es, 3) + ", |MPC - opt| " + num(em, 3);
  });
}

// --- 8 ---------------------------------------------------------------------
Gate metric_checks() {
  return guarded(8, "Metric hand-checks", [](Gate& g) {
    using namespace evaluate;
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const std::string& what) {
      if (!ok) bad.push_back(what);
    };
    const std::vector<Series> E = {{2.0}, {-1.0}};
    const double emission_base = emission_cost(E, {1.0}), price_base = price_cost(district_of(E), {1.0});
    expect(emission_base == 2.0, "emission (2,-1)");
    expect(price_base == 1.0, "price (2,-1)");
    expect(emission_cost({{-2.0, -0.5}, {-1.0, 0.0}}, {1.0, 3.0}) == 0.0, "emission all nonpositive");
    expect(price_cost(Series(10, 5.0), Series(10, 2.0)) == 100.0, "price constant");
    {
      Rng rng(77);
      std::uniform_real_distribution<double> u(-2.0, 3.0), c(0.1, 1.0);
      std::vector<Series> X(3, Series(2));
      for (auto& b : X)
        for (auto& v : b) v = u(rng);
      const Series carbon = {c(rng), c(rng)};
      double hand = 0.0;
      for (std::size_t t = 0; t < 2; ++t) {
        double pos = 0.0;
        for (std::size_t i = 0; i < 3; ++i) pos += std::max(X[i][t], 0.0);
        hand += pos * carbon[t];
      }
      expect(std::abs(emission_cost(X, carbon) - hand) <= 1e-15, "emission random 3x2");
    }
    expect(grid_cost(Series(5, 3.0), std::vector<long>(5, 0)) == 0.5, "grid constant");
    expect(grid_cost({0.0, 4.0}, {0, 0}) == 2.25, "grid (0,4)");
    expect(load_factor(Series(6, 2.0), {0, 0, 0, 1, 1, 1}) == 2.0, "load factor two months");
    const CostBreakdown base{100.0, 100.0, 100.0};
    expect(normalize(base, base) == CostBreakdown{1.0, 1.0, 1.0, 1.0}, "self normalisation");
    const auto n = normalize({50.0, 40.0, 30.0}, base);
    expect(std::abs(n.emission - 0.5) < 1e-15 && std::abs(n.price - 0.4) < 1e-15 && std::abs(n.grid - 0.3) < 1e-15 &&
               std::abs(n.average - 0.4) < 1e-15,
           "normalise arithmetic");
    expect(summary_csv({{"SOFO", 0, {0.911, 0.796, 0.881, 0.862}}}).str() ==
               "controller,seed,average,emission,price,grid\nSOFO,0,0.862,0.911,0.796,0.881\n",
           "summary layout");
    expect(wmape({1.0, 2.0}, {1.0, 2.0}) == 0.0, "wmape exact");
    expect(std::abs(wmape({10.0, 10.0}, {9.0, 11.0}) - 0.10) < 1e-15, "wmape 0.10");
    expect(std::abs(wmape({30.0, 30.0}, {27.0, 33.0}) - wmape({10.0, 10.0}, {9.0, 11.0})) < 1e-15, "wmape scale");
    g.pass = bad.empty() && emission_base == 2.0 && price_base == 1.0;
    g.detail = "emission base " + num(emission_base) + " vs price base " + num(price_base);
    for (const auto& b : bad) g.detail += "; failed: " + b;
  });
}

// --- 12 --------------------------------------------------------------------
Gate throughput() {
  return guarded(12, "24-step SOFO dispatch with N=75", [](Gate& g) {
    const auto inst = load_instance(drift_benchmark());
    const control::Split split{240, 336, 360};
    auto cfg = drift_benchmark().controller;
    cfg.n_scenarios = 75;
    const auto t0 = Clock::now();
    const auto r = control::run_sofo(inst, split, cfg);
    const double secs = since(t0);
    g.pass = secs < 15.0 && r.steps == 24 && r.replans == 24;
    g.detail = num(secs, 3) + " s wall for 24 re-plans including pre-training (dispatch only " +
               num(r.dispatch_seconds.at(0), 3) + " s)";
  });
}

// --- benchmark-backed criteria ---------------------------------------------
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "runtime.json") continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

double mean_of(const std::vector<evaluate::SummaryRow>& rows, const std::string& label) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows)
    if (r.controller == label) {
      s += r.score.average;
      ++n;
    }
  if (n == 0) throw std::runtime_error("no rows for " + label);
  return s / n;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  std::cout << "Acceptance run" << std::endl;
  report(lp_oracle());
  report(stochastic_collapse());
  report(arbitrage());
  report(gradient_check());
  report(perfect_information());

  // One full benchmark on the 30-day drift dataset backs 6, 7, 9 and 10; a
  // second invocation with the same config backs 11.
  auto cfg = drift_benchmark();
  cfg.out = "acceptance_benchmark";
  fs::remove_all(cfg.out);
  bench::BenchmarkResult first;
  std::string bench_error;
  double first_seconds = 0.0;
  try {
    const auto t0 = Clock::now();
    first = bench::run_benchmark(cfg);
    first_seconds = since(t0);
    if (first.status != 0) bench_error = first.errors.empty() ? "nonzero status" : first.errors.front();
  } catch (const std::exception& e) {
    bench_error = e.what();
  }
  const auto first_files = bench_error.empty() ? snapshot(cfg.out) : std::map<std::string, std::string>{};

  report(guarded(6, "Controller ordering on the drift dataset", [&](Gate& g) {
    if (!bench_error.empty()) throw std::runtime_error(bench_error);
    const double sofo = mean_of(first.summary, "SOFO"), mpc = mean_of(first.summary, "MPC"),
                 rbc = mean_of(first.summary, "RBC");
    const double c0 = mean_of(first.components, "MPC"), c1 = mean_of(first.components, "+rolling"),
                 c2 = mean_of(first.components, "+stochastic"), c3 = mean_of(first.components, "+fine-tuning");
    const bool cumulative = c0 > c1 && c1 > c2 && c2 > c3;
    const bool ordering = sofo < mpc && mpc < rbc && rbc < 1.0;
    const double gain = (mpc - sofo) / mpc;
    g.pass = cumulative && ordering && gain >= 0.01 && first_seconds < 600.0;
    g.detail = "SOFO " + num(sofo, 5) + " < MPC " + num(mpc, 5) + " < RBC " + num(rbc, 5) + " < 1: " +
               (ordering ? "yes" : "no") + "; components MPC " + num(c0, 5) + " > +rolling " + num(c1, 5) +
               " > +stochastic " + num(c2, 5) + " > +fine-tuning " + num(c3, 5) + ": " + (cumulative ? "yes" : "no") +
               "; gain over MPC " + num(100.0 * gain, 3) + "% (" + num(100.0 * (mpc - sofo), 3) +
               " points); runtime " + num(first_seconds, 4) + " s";
  }));

  report(guarded(7, "Scenario-count convergence", [&](Gate& g) {
    if (!bench_error.empty()) throw std::runtime_error(bench_error);
    std::map<std::size_t, bench::SweepPoint> p;
    for (const auto& s : bench::sweep_points(first.sweep)) p[s.n_scenarios] = s;
    const auto &n1 = p.at(1), &n75 = p.at(75), &n300 = p.at(300);
    const double rel = std::abs(n75.mean - n300.mean) / n300.mean;
    g.pass = n300.std < n1.std && rel <= 0.005 && n1.runs == 10 && n300.runs == 10;
    g.detail = "std N=1 " + num(n1.std, 3) + ", N=300 " + num(n300.std, 3) + "; mean N=75 " + num(n75.mean, 5) +
               " vs N=300 " + num(n300.mean, 5) + " (" + num(100.0 * rel, 3) + "%)";
    bool nonincreasing = true;
    double prev = INFINITY;
    std::string trail;
    for (const auto& [n, s] : p)
      if (n >= 75) {
        nonincreasing = nonincreasing && s.std <= prev;
        prev = s.std;
        trail += (trail.empty() ? "" : ", ") + std::to_string(n) + ":" + num(s.std, 3);
      }
    g.detail += "; note (not gated): std from N=75 upward [" + trail + "] nonincreasing: " +
                (nonincreasing ? "yes" : "no");
  }));

  report(metric_checks());

  report(guarded(9, "Update-scheme ablation", [&](Gate& g) {
    if (!bench_error.empty()) throw std::runtime_error(bench_error);
    const double noft = mean_of(first.schemes, "noft"), small = mean_of(first.schemes, "smalllr"),
                 freeze = mean_of(first.schemes, "freeze"), scratch = mean_of(first.schemes, "scratch");
    g.pass = small <= noft && freeze <= noft;
    const double ts = first.online_update_seconds.at("scratch"), tl = first.online_update_seconds.at("smalllr");
    g.detail = "NoFt " + num(noft, 5) + ", SmallLR " + num(small, 5) + ", Freeze " + num(freeze, 5) +
               "; reported: Scratch " + num(scratch, 5) + " with online-update time " + num(ts, 3) + " s vs SmallLR " +
               num(tl, 3) + " s (" + num(tl > 0 ? ts / tl : 0.0, 3) + "x)";
  }));

  bench::BenchmarkResult second;
  std::string second_error;
  try {
    fs::remove_all(cfg.out);
    second = bench::run_benchmark(cfg);
    if (second.status != 0) second_error = second.errors.empty() ? "nonzero status" : second.errors.front();
  } catch (const std::exception& e) {
    second_error = e.what();
  }

  report(guarded(10, "Feasibility of every executed step", [&](Gate& g) {
    if (!bench_error.empty()) throw std::runtime_error(bench_error);
    std::size_t episodes = 0, steps = 0, violations = 0;
    for (const auto* res : {&first, &second})
      for (const auto& f : res->feasibility) {
        ++episodes;
        steps += f.steps;
        violations += f.soc_violations + f.complementarity_violations;
      }
    g.pass = violations == 0 && steps > 0;
    g.detail = std::to_string(episodes) + " episodes, " + std::to_string(steps) + " steps, " +
               std::to_string(violations) + " violations";
  }));

  report(guarded(11, "Determinism of benchmark outputs", [&](Gate& g) {
    if (!bench_error.empty()) throw std::runtime_error(bench_error);
    if (!second_error.empty()) throw std::runtime_error(second_error);
    const auto second_files = snapshot(cfg.out);
    std::size_t differing = 0;
    for (const auto& [name, bytes] : first_files) {
      auto it = second_files.find(name);
      differing += it == second_files.end() || it->second != bytes;
    }
    differing += second_files.size() != first_files.size();
    g.pass = differing == 0 && !first_files.empty();
    g.detail = std::to_string(first_files.size()) + " files compared byte for byte (runtime.json excluded), " +
               std::to_string(differing) + " differ";
  }));

  report(throughput());

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return strict ? failures : 0;
}

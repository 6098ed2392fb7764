#pragma once

// Benchmark run configuration and the JSON form of every setting it carries.
// Missing keys take the defaults below; unknown keys are rejected so typos
// do not silently fall back to a default.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sofo/control/controller.hpp"
#include "sofo/data.hpp"
#include "sofo/serialize.hpp"

namespace sofo {

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ContractError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ContractError("unknown key '" + key + "' in " + where);
}

}  // namespace detail

namespace forecast {

inline void to_json(Json& j, const TrainHyper& h) {
  j = Json{{"epochs", h.epochs}, {"learning_rate", h.learning_rate}, {"batch_size", h.batch_size}, {"seed", h.seed}};
}
inline void from_json(const Json& j, TrainHyper& h) {
  sofo::detail::check_keys(j, {"epochs", "learning_rate", "batch_size", "seed"}, "hyper");
  const TrainHyper d;
  h.epochs = j.value("epochs", d.epochs);
  h.learning_rate = j.value("learning_rate", d.learning_rate);
  h.batch_size = j.value("batch_size", d.batch_size);
  h.seed = j.value("seed", d.seed);
}

inline void to_json(Json& j, const UpdateScheme& s) {
  j = Json{{"kind", to_string(s.kind)}, {"lr_multiplier", s.lr_multiplier}, {"correction_window", s.correction_window}};
}
inline void from_json(const Json& j, UpdateScheme& s) {
  if (j.is_string()) {
    s = {};
    s.kind = parse_scheme(j.get<std::string>());
    return;
  }
  sofo::detail::check_keys(j, {"kind", "lr_multiplier", "correction_window"}, "scheme");
  const UpdateScheme d;
  s.kind = parse_scheme(j.value("kind", to_string(d.kind)));
  s.lr_multiplier = j.value("lr_multiplier", d.lr_multiplier);
  s.correction_window = j.value("correction_window", d.correction_window);
}

}  // namespace forecast

namespace sim {

inline void to_json(Json& j, const PerturbationConfig& p) {
  Json eff = Json::array();
  for (const auto& [c, d] : p.efficiency_true) eff.push_back({c, d});
  j = Json{{"efficiency_true", eff},
           {"capacity_scale", p.capacity_scale},
           {"efficiency_jitter", p.efficiency_jitter},
           {"seed", p.seed}};
}
inline void from_json(const Json& j, PerturbationConfig& p) {
  sofo::detail::check_keys(j, {"efficiency_true", "capacity_scale", "efficiency_jitter", "seed"}, "perturb");
  const PerturbationConfig d;
  p.efficiency_true.clear();
  if (j.contains("efficiency_true"))
    for (const auto& e : j.at("efficiency_true")) p.efficiency_true.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  p.capacity_scale = j.value("capacity_scale", d.capacity_scale);
  p.efficiency_jitter = j.value("efficiency_jitter", d.efficiency_jitter);
  p.seed = j.value("seed", d.seed);
}

}  // namespace sim

namespace control {

inline void to_json(Json& j, const Split& s) {
  j = Json{{"train_end", s.train_end}, {"val_end", s.val_end}, {"control_end", s.control_end}};
}
inline void from_json(const Json& j, Split& s) {
  sofo::detail::check_keys(j, {"train_end", "val_end", "control_end"}, "split");
  s.train_end = j.at("train_end").get<std::size_t>();
  s.val_end = j.at("val_end").get<std::size_t>();
  s.control_end = j.at("control_end").get<std::size_t>();
}

inline void to_json(Json& j, const ForecastSettings& f) {
  j = Json{{"kind", forecast::to_string(f.kind)},
           {"lags", f.lags},
           {"hidden", f.hidden},
           {"hyper", f.hyper},
           {"finetune_epochs", f.finetune_epochs},
           {"online_window", f.online_window},
           {"online_validation", f.online_validation},
           {"error_window", f.error_window},
           {"epsilon_scale", f.epsilon_scale}};
}
inline void from_json(const Json& j, ForecastSettings& f) {
  sofo::detail::check_keys(j,
                           {"kind", "lags", "hidden", "hyper", "finetune_epochs", "online_window", "online_validation",
                            "error_window", "epsilon_scale"},
                           "forecast");
  const ForecastSettings d;
  f.kind = forecast::parse_model_kind(j.value("kind", forecast::to_string(d.kind)));
  f.lags = j.value("lags", d.lags);
  f.hidden = j.value("hidden", d.hidden);
  f.hyper = j.contains("hyper") ? j.at("hyper").get<forecast::TrainHyper>() : d.hyper;
  f.finetune_epochs = j.value("finetune_epochs", d.finetune_epochs);
  f.online_window = j.value("online_window", d.online_window);
  f.online_validation = j.value("online_validation", d.online_validation);
  f.error_window = j.value("error_window", d.error_window);
  f.epsilon_scale = j.value("epsilon_scale", d.epsilon_scale);
}

inline void to_json(Json& j, const ControllerConfig& c) {
  j = Json{{"horizon_T", c.horizon_T},
           {"T_rl", c.T_rl},
           {"T_ft", c.T_ft},
           {"epsilon", c.epsilon ? Json(*c.epsilon) : Json(nullptr)},
           {"scheme", c.scheme},
           {"n_scenarios", c.n_scenarios},
           {"seed", c.seed},
           {"model_seed", c.model_seed},
           {"forecast", c.forecast},
           {"perturb", c.perturb},
           {"oracle", c.oracle},
           {"zero_sigma", c.zero_sigma}};
}
inline void from_json(const Json& j, ControllerConfig& c) {
  sofo::detail::check_keys(j,
                           {"horizon_T", "T_rl", "T_ft", "epsilon", "scheme", "n_scenarios", "seed", "model_seed",
                            "forecast", "perturb", "oracle", "zero_sigma"},
                           "controller");
  const ControllerConfig d;
  c.horizon_T = j.value("horizon_T", d.horizon_T);
  c.T_rl = j.value("T_rl", d.T_rl);
  c.T_ft = j.value("T_ft", d.T_ft);
  c.epsilon = (j.contains("epsilon") && !j.at("epsilon").is_null()) ? std::optional<double>(j.at("epsilon").get<double>())
                                                                      : std::nullopt;
  c.scheme = j.contains("scheme") ? j.at("scheme").get<forecast::UpdateScheme>() : d.scheme;
  c.n_scenarios = j.value("n_scenarios", d.n_scenarios);
  c.seed = j.value("seed", d.seed);
  c.model_seed = j.value("model_seed", d.model_seed);
  c.forecast = j.contains("forecast") ? j.at("forecast").get<ForecastSettings>() : d.forecast;
  c.perturb = j.contains("perturb") ? j.at("perturb").get<sim::PerturbationConfig>() : d.perturb;
  c.oracle = j.value("oracle", d.oracle);
  c.zero_sigma = j.value("zero_sigma", d.zero_sigma);
}

}  // namespace control

/// Everything one benchmark invocation needs.
struct RunConfig {
  std::optional<std::string> dataset;  // CSV directory; synthetic data when unset
  data::SyntheticSpec synthetic;
  control::Split split{240, 336, 720};
  std::vector<std::string> controllers{"NoStorage", "RBC", "MPC", "AMPC", "SOFO"};
  control::ControllerConfig controller;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out = "out";
  bool components = true;
  std::vector<std::size_t> sweep_scenarios{1, 25, 50, 75, 150, 300, 450};
  std::vector<std::uint64_t> sweep_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> schemes{"noft", "selfadapt", "scratch", "smalllr", "freeze"};
  std::size_t threads = 0;  // 0: one per hardware thread

  /// Checks everything that does not need the dataset; `horizon` adds the
  /// split bound check when known.
  void validate(std::optional<std::size_t> horizon = std::nullopt) const {
    static const std::set<std::string> known{"NoStorage", "RBC", "MPC", "AMPC", "SOFO"};
    if (controllers.empty()) throw ContractError("at least one controller required");
    for (const auto& c : controllers)
      if (!known.count(c)) throw ContractError("unknown controller '" + c + "' (NoStorage|RBC|MPC|AMPC|SOFO)");
    if (seeds.empty()) throw ContractError("seed list is empty");
    for (auto n : sweep_scenarios)
      if (n < 1) throw ContractError("scenario counts must be >= 1");
    for (const auto& s : schemes) forecast::parse_scheme(s);
    controller.validate();
    if (!dataset) synthetic.validate();
    if (!(split.train_end <= split.val_end && split.val_end < split.control_end))
      throw ContractError("split boundaries must satisfy train_end <= val_end < control_end");
    if (horizon) split.validate(*horizon);
    if (!dataset) split.validate(synthetic.days * 24);
  }

  bool operator==(const RunConfig& o) const { return Json(*this) == Json(o); }

  friend void to_json(Json& j, const RunConfig& r) {
    j = Json{{"dataset", r.dataset ? Json(*r.dataset) : Json(nullptr)},
             {"synthetic", r.synthetic},
             {"split", r.split},
             {"controllers", r.controllers},
             {"controller", r.controller},
             {"seeds", r.seeds},
             {"out", r.out},
             {"components", r.components},
             {"sweep_scenarios", r.sweep_scenarios},
             {"sweep_seeds", r.sweep_seeds},
             {"schemes", r.schemes},
             {"threads", r.threads}};
  }
  friend void from_json(const Json& j, RunConfig& r) {
    detail::check_keys(j,
                       {"dataset", "synthetic", "split", "controllers", "controller", "seeds", "out", "components",
                        "sweep_scenarios", "sweep_seeds", "schemes", "threads"},
                       "run config");
    const RunConfig d;
    r.dataset = (j.contains("dataset") && !j.at("dataset").is_null())
                    ? std::optional<std::string>(j.at("dataset").get<std::string>())
                    : std::nullopt;
    r.synthetic = j.contains("synthetic") ? j.at("synthetic").get<data::SyntheticSpec>() : d.synthetic;
    r.split = j.contains("split") ? j.at("split").get<control::Split>() : d.split;
    r.controllers = j.value("controllers", d.controllers);
    r.controller = j.contains("controller") ? j.at("controller").get<control::ControllerConfig>() : d.controller;
    r.seeds = j.value("seeds", d.seeds);
    r.out = j.value("out", d.out);
    r.components = j.value("components", d.components);
    r.sweep_scenarios = j.value("sweep_scenarios", d.sweep_scenarios);
    r.sweep_seeds = j.value("sweep_seeds", d.sweep_seeds);
    r.schemes = j.value("schemes", d.schemes);
    r.threads = j.value("threads", d.threads);
  }
};

/// The frozen 30-day drift benchmark: loads rise 20% from day 15, batteries
/// lose 5% per direction in the simulator while the optimizer assumes none.
inline RunConfig drift_benchmark() {
  RunConfig r;
  r.synthetic.days = 30;
  r.synthetic.drift = {15, 1.2};
  r.controller.perturb.efficiency_true.assign(r.synthetic.n_buildings, {0.95, 0.95});
  return r;
}

inline RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, -1, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str()).get<RunConfig>();
  } catch (const Json::exception& e) {
    throw ParseError(path, -1, e.what());
  }
}

/// Dataset named by the config: the CSV directory or the synthetic generator.
inline ProblemInstance load_instance(const RunConfig& cfg) {
  return cfg.dataset ? data::load_dataset(*cfg.dataset) : data::generate_synthetic(cfg.synthetic);
}

}  // namespace sofo

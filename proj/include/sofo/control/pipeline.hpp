#pragma once

// Forecast pipeline for the control window: pre-training, validation
// variance, and a per-step trace of forecasts with online fine-tuning.
//
// Forecasts never depend on battery actions, so the whole control window is
// forecast once per (update scheme, model seed) and every controller that uses
// the same models replays the trace.
//
// Targets: one load model per building, one solar model on the district
// per-kW capacity series (split across generators by nameplate), and one
// price model.

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/evaluate.hpp"
#include "sofo/forecast/model.hpp"
#include "sofo/scenario.hpp"

namespace sofo::control {

/// Index boundaries: training [0, train_end), validation [train_end, val_end),
/// control [val_end, control_end).
struct Split {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t control_end = 0;

  std::size_t control_steps() const { return control_end - val_end; }

  void validate(std::size_t horizon) const {
    if (!(train_end <= val_end && val_end < control_end))
      throw ContractError("split boundaries must satisfy train_end <= val_end < control_end");
    if (control_end > horizon)
      throw ContractError("control_end " + std::to_string(control_end) + " beyond dataset length " +
                          std::to_string(horizon));
  }
  bool operator==(const Split&) const = default;
};

struct ForecastSettings {
  forecast::ModelKind kind = forecast::ModelKind::linear;
  std::size_t lags = 24;
  std::size_t hidden = 32;
  forecast::TrainHyper hyper{100, 0.1, 16, 0};
  int finetune_epochs = 10;
  std::size_t online_window = 168;     // origins kept for fine-tuning
  std::size_t online_validation = 48;  // most recent origins held out for variance
  std::size_t error_window = 24;       // rolling WMAPE length, also the post-update cooldown
  double epsilon_scale = 1.5;          // epsilon = scale * validation WMAPE when not given

  bool operator==(const ForecastSettings&) const = default;
};

/// One forecast target over the whole dataset.
struct TargetSeries {
  std::string name;  // "load:<building>", "solar", "price"
  forecast::Target target = forecast::Target::load;
  Series values;
};

inline std::vector<TargetSeries> target_series(const ProblemInstance& inst) {
  std::vector<TargetSeries> out;
  for (const auto& b : inst.buildings) out.push_back({"load:" + b.id, forecast::Target::load, b.load});
  if (!inst.generators.empty()) {
    double total = 0.0;
    for (const auto& g : inst.generators) total += g.p_max_capacity;
    Series s(inst.horizon(), 0.0);
    // Capacity of each generator is its building's solar split by nameplate
    // among the generators of that building.
    for (const auto& g : inst.generators) {
      const auto b = inst.building_index(g.id);
      double same = 0.0;
      for (const auto& h : inst.generators)
        if (h.id == g.id) same += h.p_max_capacity;
      if (b == inst.buildings.size() || !(same > 0.0)) continue;
      for (std::size_t t = 0; t < s.size(); ++t)
        s[t] += inst.buildings[b].solar_capacity[t] * g.p_max_capacity / same;
    }
    if (total > 0.0)
      for (auto& v : s) v /= total;
    out.push_back({"solar", forecast::Target::solar_capacity, s});
  }
  out.push_back({"price", forecast::Target::price, inst.market.price});
  return out;
}

/// Pre-trained models with their validation statistics.
struct Pretrained {
  std::vector<forecast::ForecastModel> models;  // aligned with target_series()
  std::vector<forecast::UncertaintyEstimate> sigma;
  std::vector<double> validation_wmape;  // h = 0 forecasts on the validation split
  double seconds = 0.0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double wmape_or_zero(const Series& actual, const Series& predicted) {
  double den = 0.0;
  for (double a : actual) den += std::abs(a);
  return den > 0.0 ? evaluate::wmape(actual, predicted) : 0.0;
}

inline double h0_wmape(const forecast::ForecastModel& m, const std::vector<forecast::Sample>& data) {
  Series a, p;
  for (const auto& s : data) {
    a.push_back(s.target[0]);
    p.push_back(forecast::predict(m, s, 1)[0]);
  }
  return wmape_or_zero(a, p);
}

}  // namespace detail

/// Trains one model per target on [0, train_end) and estimates variance on
/// the validation windows that end before val_end.
inline Pretrained pretrain(const ProblemInstance& inst, const Split& split, const ForecastSettings& fs,
                           std::uint64_t model_seed, std::size_t horizon) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t K = fs.lags, H = horizon;
  if (split.train_end < K + H + 1) throw ContractError("training window too short for the lag and horizon lengths");
  if (split.val_end < split.train_end + H + 1) throw ContractError("validation window needs at least 2 full horizons");
  Pretrained out;
  const auto train_origins = forecast::origin_range(K, split.train_end - H);
  const auto val_origins = forecast::origin_range(split.train_end, split.val_end - H);
  const forecast::ModelSpec base{fs.kind, forecast::Target::load, K, H, fs.hidden};
  const auto targets = target_series(inst);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto spec = base;
    spec.target = targets[i].target;
    auto hyper = fs.hyper;
    hyper.seed = derive_seed(model_seed, {i});
    const auto train = forecast::make_samples(targets[i].values, inst.grid, train_origins, K, H);
    const auto val = forecast::make_samples(targets[i].values, inst.grid, val_origins, K, H);
    auto m = forecast::train(spec, train, hyper);
    out.sigma.push_back(forecast::estimate_variance(m, val));
    out.validation_wmape.push_back(detail::h0_wmape(m, val));
    out.models.push_back(std::move(m));
  }
  out.seconds = detail::seconds_since(t0);
  return out;
}

struct TraceConfig {
  std::size_t horizon_T = 24;
  std::size_t T_ft = 168;
  std::optional<double> epsilon;  // per-model default from validation WMAPE
  forecast::UpdateScheme scheme;
  ForecastSettings forecast;
  bool oracle = false;      // forecasts equal the realised values
  bool zero_sigma = false;  // drop the uncertainty estimate

  void validate() const {
    if (horizon_T < 1) throw ContractError("horizon_T must be >= 1");
    if (T_ft < 1) throw ContractError("T_ft must be >= 1");
    if (epsilon && !(*epsilon > 0.0)) throw ContractError("epsilon must be > 0");
    scheme.validate();
  }
};

struct FineTuneEvent {
  std::size_t step = 0;  // control step after which the update ran
  std::string target;
  std::string reason;  // "periodic" or "error"
  double rolling_wmape = 0.0;
  double seconds = 0.0;  // wall time of the update
};

/// Per-target forecast record over the control window.
struct TargetTrace {
  std::string name;
  std::vector<Series> mean;   // [k][h], h < min(H, steps - k)
  std::vector<Series> sigma;  // same shape
  Series predicted_h0, actual_h0;
  double epsilon = 0.0;
  forecast::ForecastModel initial, final;
};

struct ForecastTrace {
  std::size_t t0 = 0;
  std::size_t steps = 0;
  std::vector<TargetTrace> targets;
  std::vector<FineTuneEvent> fine_tunes;
  std::vector<double> step_seconds;  // inference + fine-tuning per control step
  double pretrain_seconds = 0.0;

  std::size_t length(std::size_t k) const { return targets.front().mean[k].size(); }

  /// Forecast and uncertainty issued at control step k, first `len` steps.
  std::pair<PointForecast, ForecastSigma> at(const ProblemInstance& inst, std::size_t k, std::size_t len) const {
    if (len > length(k)) throw ShapeError("requested forecast beyond the traced horizon");
    auto cut = [&](const Series& s) { return Series(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len)); };
    PointForecast f, sd;
    const std::size_t B = inst.buildings.size();
    for (std::size_t b = 0; b < B; ++b) {
      f.load.push_back(cut(targets[b].mean[k]));
      sd.load.push_back(cut(targets[b].sigma[k]));
    }
    for (const auto& g : inst.generators) {
      Series m = cut(targets[B].mean[k]), s = cut(targets[B].sigma[k]);
      for (auto& v : m) v *= g.p_max_capacity;
      for (auto& v : s) v *= g.p_max_capacity;
      f.solar.push_back(std::move(m));
      sd.solar.push_back(std::move(s));
    }
    f.price = cut(targets.back().mean[k]);
    sd.price = cut(targets.back().sigma[k]);
    return {std::move(f), std::move(sd)};
  }
};

/// Forecasts every control step with the pre-trained models, fine-tuning
/// them online under `cfg.scheme`. At step k (time t) the models see values
/// up to t - 1; after t is realised the update rule is checked: an update
/// runs when T_ft steps have passed since the last one, or when the rolling
/// WMAPE of the h = 0 forecasts over the last error_window steps reaches
/// epsilon. Updated models re-estimate variance on the most recent
/// online_validation windows and train on the older part of the online pool.
inline ForecastTrace build_trace(const ProblemInstance& inst, const Split& split, const TraceConfig& cfg,
                                 const Pretrained* pre) {
  cfg.validate();
  split.validate(inst.horizon());
  const auto targets = target_series(inst);
  const std::size_t H = cfg.horizon_T, K = cfg.forecast.lags;
  const std::size_t t0 = split.val_end, steps = split.control_steps();
  ForecastTrace tr;
  tr.t0 = t0;
  tr.steps = steps;
  tr.targets.resize(targets.size());
  tr.step_seconds.assign(steps, 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) tr.targets[i].name = targets[i].name;

  if (cfg.oracle) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      auto& tt = tr.targets[i];
      for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = t0 + k, len = std::min(H, steps - k);
        tt.mean.emplace_back(targets[i].values.begin() + static_cast<std::ptrdiff_t>(t),
                             targets[i].values.begin() + static_cast<std::ptrdiff_t>(t + len));
        tt.sigma.emplace_back(len, 0.0);
        tt.predicted_h0.push_back(targets[i].values[t]);
        tt.actual_h0.push_back(targets[i].values[t]);
      }
    }
    return tr;
  }
  if (!pre || pre->models.size() != targets.size()) throw ContractError("model forecasts need pre-trained models");
  if (pre->models.front().spec.horizon != H || pre->models.front().spec.lags != K)
    throw ContractError("pre-trained models do not match the configured horizon and lags");
  tr.pretrain_seconds = pre->seconds;

  const auto& fs = cfg.forecast;
  forecast::TrainHyper ft_hyper = fs.hyper;
  ft_hyper.epochs = fs.finetune_epochs;
  const auto pretrain_origins = forecast::origin_range(K, split.train_end - H);

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& y = targets[i].values;
    auto& tt = tr.targets[i];
    auto model = pre->models[i];
    auto sigma = pre->sigma[i].sigma;
    if (cfg.zero_sigma) std::fill(sigma.begin(), sigma.end(), 0.0);
    tt.initial = model;
    tt.epsilon = cfg.epsilon ? *cfg.epsilon : std::max(fs.epsilon_scale * pre->validation_wmape[i], 1e-6);
    std::vector<forecast::Sample> pretrain_samples;
    if (cfg.scheme.kind == forecast::SchemeKind::Scratch)
      pretrain_samples = forecast::make_samples(y, inst.grid, pretrain_origins, K, H);

    std::size_t last_update = 0;  // control steps since start when the models last changed
    for (std::size_t k = 0; k < steps; ++k) {
      const auto clock = std::chrono::steady_clock::now();
      const std::size_t t = t0 + k, len = std::min(H, steps - k);
      const auto input = forecast::make_input(y, inst.grid, t, K);
      const auto p = forecast::predict(model, input, H);
      tt.mean.emplace_back(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(len));
      tt.sigma.emplace_back(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(len));
      tt.predicted_h0.push_back(p[0]);
      tt.actual_h0.push_back(y[t]);

      // y[t] is now realised.
      const std::size_t since = k + 1 - last_update;
      std::string reason;
      double rolling = 0.0;
      if (since >= fs.error_window) {
        const auto from = static_cast<std::ptrdiff_t>(k + 1 - fs.error_window);
        rolling = detail::wmape_or_zero(Series(tt.actual_h0.begin() + from, tt.actual_h0.end()),
                                        Series(tt.predicted_h0.begin() + from, tt.predicted_h0.end()));
        if (rolling >= tt.epsilon) reason = "error";
      }
      if (since >= cfg.T_ft) reason = "periodic";
      if (!reason.empty() && cfg.scheme.kind != forecast::SchemeKind::NoFt && k + 1 < steps) {
        const std::size_t newest = t + 1 - H;  // last origin with a realised target window
        const std::size_t oldest =
            std::max({split.train_end, K, newest + 1 > fs.online_window ? newest + 1 - fs.online_window : 0});
        const auto pool = forecast::make_samples(y, inst.grid, forecast::origin_range(oldest, newest), K, H);
        const std::size_t n_val = std::min(fs.online_validation, pool.size() / 2);
        const std::vector<forecast::Sample> fit(pool.begin(), pool.end() - static_cast<std::ptrdiff_t>(n_val));
        const std::vector<forecast::Sample> val(pool.end() - static_cast<std::ptrdiff_t>(n_val), pool.end());
        const auto update_clock = std::chrono::steady_clock::now();
        auto hyper = ft_hyper;
        hyper.seed = derive_seed(fs.hyper.seed, {i, k});
        if (cfg.scheme.kind == forecast::SchemeKind::SelfAdapt) {
          auto scheme = cfg.scheme;
          scheme.correction_window = std::min(scheme.correction_window, pool.size());
          model = forecast::apply_update(model, scheme, pool, hyper);
        } else {
          if (cfg.scheme.kind == forecast::SchemeKind::Scratch) hyper.epochs = fs.hyper.epochs;
          model = forecast::apply_update(model, cfg.scheme, fit, hyper, pretrain_samples);
        }
        if (!cfg.zero_sigma && val.size() >= 2) sigma = forecast::estimate_variance(model, val).sigma;
        tr.fine_tunes.push_back({k, targets[i].name, reason, rolling, detail::seconds_since(update_clock)});
        last_update = k + 1;
      }
      tr.step_seconds[k] += detail::seconds_since(clock);
    }
    tt.final = model;
  }
  std::stable_sort(tr.fine_tunes.begin(), tr.fine_tunes.end(),
                   [](const FineTuneEvent& a, const FineTuneEvent& b) { return a.step < b.step; });
  return tr;
}

}  // namespace sofo::control

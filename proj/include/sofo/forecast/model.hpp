#pragma once

// Forecasting models: training, inference, residual spread and online
// updates.
//
// A sample issued at origin t holds K input rows; row j (0-based) describes
// step t-K+1+j with its calendar encoding, the observation of the previous
// step y[t-K+j] and any exogenous values of that previous step. The targets
// are y[t .. t+H-1]. The recurrent model consumes the rows in order; the
// linear model uses the origin's calendar encoding plus all K lags.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/errors.hpp"
#include "sofo/forecast/features.hpp"
#include "sofo/forecast/recurrent.hpp"
#include "sofo/rng.hpp"

namespace sofo::forecast {

enum class ModelKind { linear, recurrent };
enum class Target { solar_capacity, load, price };

inline std::string to_string(ModelKind k) { return k == ModelKind::linear ? "linear" : "recurrent"; }
inline std::string to_string(Target t) {
  switch (t) {
    case Target::solar_capacity: return "solar_capacity";
    case Target::load: return "load";
    default: return "price";
  }
}
inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "recurrent") return ModelKind::recurrent;
  throw ContractError("unknown model kind '" + s + "'");
}
inline Target parse_target(const std::string& s) {
  if (s == "solar_capacity") return Target::solar_capacity;
  if (s == "load") return Target::load;
  if (s == "price") return Target::price;
  throw ContractError("unknown forecast target '" + s + "'");
}

struct Sample {
  std::size_t origin = 0;
  Matrix sequence;             // K x input_dim, raw units
  std::vector<double> target;  // empty for inference inputs
};

/// Input rows for a forecast issued at t. Needs t >= K.
inline Sample make_input(const Series& y, const TimeGrid& grid, std::size_t t, std::size_t K,
                         const std::vector<Series>& exogenous = {}) {
  const auto fv = build_features(y, grid, t, K, exogenous);  // validates t, K
  const std::size_t D = kTimeFeatures + 1 + exogenous.size();
  Sample s;
  s.origin = t;
  s.sequence.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(D));
  for (std::size_t j = 0; j < K; ++j) {
    const std::size_t step = t - K + 1 + j;
    const auto tf = time_features(grid, step);
    const auto r = static_cast<Eigen::Index>(j);
    for (std::size_t c = 0; c < kTimeFeatures; ++c) s.sequence(r, static_cast<Eigen::Index>(c)) = tf[c];
    s.sequence(r, static_cast<Eigen::Index>(kTimeFeatures)) = fv.lag_features[j];
    for (std::size_t e = 0; e < exogenous.size(); ++e)
      s.sequence(r, static_cast<Eigen::Index>(kTimeFeatures + 1 + e)) = exogenous[e][step - 1];
  }
  return s;
}

/// Supervised samples for every origin; each needs y[origin + H - 1].
inline std::vector<Sample> make_samples(const Series& y, const TimeGrid& grid, const std::vector<std::size_t>& origins,
                                        std::size_t K, std::size_t H, const std::vector<Series>& exogenous = {}) {
  std::vector<Sample> out;
  out.reserve(origins.size());
  for (auto t : origins) {
    if (t + H > y.size())
      throw ContractError("origin " + std::to_string(t) + " has no full target window of " + std::to_string(H));
    auto s = make_input(y, grid, t, K, exogenous);
    s.target.assign(y.begin() + static_cast<std::ptrdiff_t>(t), y.begin() + static_cast<std::ptrdiff_t>(t + H));
    out.push_back(std::move(s));
  }
  return out;
}

/// Consecutive origins [first, last] with stride 1.
inline std::vector<std::size_t> origin_range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> o;
  for (std::size_t t = first; t <= last; ++t) o.push_back(t);
  return o;
}

/// Per-column affine standardisation. A constant column gets scale 1.
struct Normalizer {
  std::vector<double> mean, scale;

  static Normalizer fit(const std::vector<std::vector<double>>& columns) {
    Normalizer n;
    for (const auto& c : columns) {
      if (c.empty()) throw ContractError("cannot fit normalisation on an empty column");
      double m = 0.0;
      for (double v : c) m += v;
      m /= static_cast<double>(c.size());
      double q = 0.0;
      for (double v : c) q += (v - m) * (v - m);
      const double sd = std::sqrt(q / static_cast<double>(c.size()));
      n.mean.push_back(m);
      n.scale.push_back(sd > 1e-12 ? sd : 1.0);
    }
    return n;
  }
  double normalize(std::size_t i, double v) const { return (v - mean[i]) / scale[i]; }
  double denormalize(std::size_t i, double v) const { return v * scale[i] + mean[i]; }

  bool operator==(const Normalizer&) const = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::recurrent;
  Target target = Target::load;
  std::size_t lags = 24;
  std::size_t horizon = 24;
  std::size_t hidden = 32;

  bool operator==(const ModelSpec&) const = default;
};

struct TrainHyper {
  int epochs = 100;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct ForecastModel {
  ModelSpec spec;
  std::size_t input_dim = 0;  // width of one input row
  Normalizer input;           // per input column
  Normalizer output;          // one column: the target
  std::vector<double> params;
  double correction_a = 1.0;  // SelfAdapt: prediction -> a * prediction + b
  double correction_b = 0.0;

  bool operator==(const ForecastModel&) const = default;

  std::size_t linear_width() const { return kTimeFeatures + spec.lags + (input_dim - kTimeFeatures - 1); }
  RecurrentNet net() const { return {input_dim, spec.hidden, spec.horizon, params}; }
  /// Index where the readout parameters start.
  std::size_t readout_offset() const {
    return spec.kind == ModelKind::recurrent ? net().readout_offset() : 0;
  }
};

struct TrainReport {
  std::vector<double> loss;  // loss[0] before the first update, then one per epoch
};

namespace detail {

inline Matrix normalized_sequence(const ForecastModel& m, const Sample& s) {
  Matrix x = s.sequence;
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      x(r, c) = m.input.normalize(static_cast<std::size_t>(c), x(r, c));
  return x;
}

inline Vector linear_input(const ForecastModel& m, const Matrix& xn) {
  const std::size_t K = m.spec.lags;
  const std::size_t n_exo = m.input_dim - kTimeFeatures - 1;
  Vector u(static_cast<Eigen::Index>(m.linear_width()));
  const Eigen::Index last = xn.rows() - 1;
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < kTimeFeatures; ++c) u(k++) = xn(last, static_cast<Eigen::Index>(c));
  for (std::size_t j = 0; j < K; ++j) u(k++) = xn(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(kTimeFeatures));
  for (std::size_t e = 0; e < n_exo; ++e) u(k++) = xn(last, static_cast<Eigen::Index>(kTimeFeatures + 1 + e));
  return u;
}

inline void check_sample(const ForecastModel& m, const Sample& s) {
  if (static_cast<std::size_t>(s.sequence.rows()) != m.spec.lags ||
      static_cast<std::size_t>(s.sequence.cols()) != m.input_dim)
    throw ShapeError("sample is " + std::to_string(s.sequence.rows()) + "x" + std::to_string(s.sequence.cols()) +
                     ", model expects " + std::to_string(m.spec.lags) + "x" + std::to_string(m.input_dim));
}

inline Vector normalized_target(const ForecastModel& m, const Sample& s) {
  Vector y(static_cast<Eigen::Index>(m.spec.horizon));
  for (std::size_t h = 0; h < m.spec.horizon; ++h) y(static_cast<Eigen::Index>(h)) = m.output.normalize(0, s.target[h]);
  return y;
}

/// Normalised inputs and targets of a dataset, computed once per fit.
struct Prepared {
  std::vector<Matrix> x;
  Eigen::MatrixXd y;  // horizon x samples
};

inline Prepared prepare(const ForecastModel& m, const std::vector<Sample>& data) {
  Prepared p;
  p.x.reserve(data.size());
  p.y.resize(static_cast<Eigen::Index>(m.spec.horizon), static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    check_sample(m, data[i]);
    p.x.push_back(normalized_sequence(m, data[i]));
    p.y.col(static_cast<Eigen::Index>(i)) = normalized_target(m, data[i]);
  }
  return p;
}

/// Model output in normalised target units, one column per input.
inline Eigen::MatrixXd batch_output(const ForecastModel& m, const std::vector<const Matrix*>& xs,
                                    ForwardCache* cache = nullptr) {
  if (m.spec.kind == ModelKind::recurrent) return forward_batch(m.net(), xs, cache);
  const auto H = static_cast<Eigen::Index>(m.spec.horizon);
  const auto D = static_cast<Eigen::Index>(m.linear_width());
  Eigen::Map<const Matrix> W(m.params.data(), H, D);
  Eigen::Map<const Vector> b(m.params.data() + H * D, H);
  Eigen::MatrixXd U(D, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) U.col(static_cast<Eigen::Index>(i)) = linear_input(m, *xs[i]);
  Eigen::MatrixXd out = W * U;
  out.colwise() += b;
  return out;
}

inline Vector raw_output(const ForecastModel& m, const Sample& s) {
  check_sample(m, s);
  const Matrix xn = normalized_sequence(m, s);
  return batch_output(m, {&xn}).col(0);
}

/// Mean squared error over samples and horizon steps, normalised units.
inline double prepared_loss(const ForecastModel& m, const Prepared& p) {
  constexpr std::size_t chunk = 64;
  double total = 0.0;
  for (std::size_t start = 0; start < p.x.size(); start += chunk) {
    const std::size_t end = std::min(p.x.size(), start + chunk);
    std::vector<const Matrix*> xs;
    for (std::size_t i = start; i < end; ++i) xs.push_back(&p.x[i]);
    const auto out = batch_output(m, xs);
    total += (out - p.y.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start))).squaredNorm();
  }
  return total / static_cast<double>(p.x.size() * m.spec.horizon);
}

inline double dataset_loss(const ForecastModel& m, const std::vector<Sample>& data) {
  return prepared_loss(m, prepare(m, data));
}

/// Gradient of the batch MSE (mean over the batch and horizon) into grad.
/// Returns the batch MSE.
inline double batch_gradient(const ForecastModel& m, const Prepared& p, const std::vector<std::size_t>& idx,
                           std::vector<double>& grad) {
  std::vector<const Matrix*> xs;
  Eigen::MatrixXd y(p.y.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    xs.push_back(&p.x[idx[k]]);
    y.col(static_cast<Eigen::Index>(k)) = p.y.col(static_cast<Eigen::Index>(idx[k]));
  }
  const double scale = 2.0 / static_cast<double>(idx.size() * m.spec.horizon);
  if (m.spec.kind == ModelKind::recurrent) {
    const auto net = m.net();
    ForwardCache cache;
    const Eigen::MatrixXd err = forward_batch(net, xs, &cache) - y;
    backward_batch(net, xs, cache, scale * err, grad);
    return 0.5 * scale * err.squaredNorm();
  }
  const auto H = static_cast<Eigen::Index>(m.spec.horizon);
  const auto D = static_cast<Eigen::Index>(m.linear_width());
  Eigen::Map<const Matrix> W(m.params.data(), H, D);
  Eigen::Map<const Vector> b(m.params.data() + H * D, H);
  Eigen::MatrixXd U(D, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) U.col(static_cast<Eigen::Index>(i)) = linear_input(m, *xs[i]);
  Eigen::MatrixXd out = W * U;
  out.colwise() += b;
  const Eigen::MatrixXd err = out - y;
  const Eigen::MatrixXd dy = scale * err;
  Eigen::Map<Matrix> gW(grad.data(), H, D);
  Eigen::Map<Vector> gb(grad.data() + H * D, H);
  gW.noalias() += dy * U.transpose();
  gb += dy.rowwise().sum();
  return 0.5 * scale * err.squaredNorm();
}

/// Mini-batch gradient descent on params[from, end). The full training loss
/// is evaluated after each epoch only when a report is requested; otherwise
/// divergence is detected from the batch losses.
inline void sgd(ForecastModel& m, const std::vector<Sample>& data, const TrainHyper& hyper, double lr, std::size_t from,
                TrainReport* report) {
  if (hyper.batch_size == 0) throw ContractError("batch_size must be >= 1");
  const Prepared p = prepare(m, data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(m.params.size());
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double batch_loss =
          batch_gradient(m, p,
                         std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                  order.begin() + static_cast<std::ptrdiff_t>(end)),
                         grad);
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch, "batch loss is " + std::to_string(batch_loss));
      for (std::size_t q = from; q < m.params.size(); ++q) m.params[q] -= lr * grad[q];
    }
    if (report) {
      const double loss = prepared_loss(m, p);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, "training loss is " + std::to_string(loss));
      report->loss.push_back(loss);
    }
  }
}

inline void fit_normalizers(ForecastModel& m, const std::vector<Sample>& data) {
  std::vector<std::vector<double>> cols(m.input_dim);
  std::vector<std::vector<double>> target(1);
  for (const auto& s : data) {
    for (Eigen::Index r = 0; r < s.sequence.rows(); ++r)
      for (std::size_t c = 0; c < m.input_dim; ++c) cols[c].push_back(s.sequence(r, static_cast<Eigen::Index>(c)));
    target[0].insert(target[0].end(), s.target.begin(), s.target.end());
  }
  m.input = Normalizer::fit(cols);
  m.output = Normalizer::fit(target);
}

/// Closed-form least squares for the linear model.
inline void fit_linear(ForecastModel& m, const std::vector<Sample>& data) {
  const auto N = static_cast<Eigen::Index>(data.size());
  const auto D = static_cast<Eigen::Index>(m.linear_width());
  const auto H = static_cast<Eigen::Index>(m.spec.horizon);
  Matrix X(N, D + 1);
  Matrix Y(N, H);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& s = data[static_cast<std::size_t>(i)];
    X.row(i).head(D) = linear_input(m, normalized_sequence(m, s)).transpose();
    X(i, D) = 1.0;
    Y.row(i) = normalized_target(m, s).transpose();
  }
  const Eigen::MatrixXd beta = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(X).solve(Eigen::MatrixXd(Y));
  m.params.assign(static_cast<std::size_t>(H * (D + 1)), 0.0);
  Eigen::Map<Matrix> W(m.params.data(), H, D);
  Eigen::Map<Vector> b(m.params.data() + H * D, H);
  W = beta.topRows(D).transpose();
  b = beta.row(D).transpose();
}

inline void check_dataset(const ModelSpec& spec, const std::vector<Sample>& data) {
  if (data.empty()) throw ContractError("training dataset is empty");
  for (const auto& s : data) {
    if (s.target.size() != spec.horizon) throw ShapeError("sample target length differs from model horizon");
    if (static_cast<std::size_t>(s.sequence.rows()) != spec.lags) throw ShapeError("sample length differs from lags");
    if (s.sequence.cols() != data.front().sequence.cols()) throw ShapeError("ragged sample widths");
  }
}

}  // namespace detail

/// Fits normalisation on `data`, initialises from `hyper.seed` and trains.
/// The linear model is fitted by exact least squares; the recurrent model by
/// mini-batch gradient descent on the MSE.
inline ForecastModel train(const ModelSpec& spec, const std::vector<Sample>& data, const TrainHyper& hyper,
                           TrainReport* report = nullptr) {
  if (spec.lags < 1 || spec.horizon < 1) throw ContractError("lags and horizon must be >= 1");
  if (hyper.epochs < 0 || !(hyper.learning_rate > 0.0)) throw ContractError("invalid training hyperparameters");
  detail::check_dataset(spec, data);
  ForecastModel m;
  m.spec = spec;
  m.input_dim = static_cast<std::size_t>(data.front().sequence.cols());
  if (m.input_dim < kTimeFeatures + 1) throw ShapeError("sample rows need time features and the lag value");
  detail::fit_normalizers(m, data);
  if (spec.kind == ModelKind::linear) {
    if (report) {
      m.params.assign((m.linear_width() + 1) * spec.horizon, 0.0);
      report->loss.push_back(detail::dataset_loss(m, data));
    }
    detail::fit_linear(m, data);
    const double loss = detail::dataset_loss(m, data);
    if (!std::isfinite(loss)) throw DivergenceError(1, "least-squares fit is not finite");
    if (report) report->loss.push_back(loss);
    return m;
  }
  if (spec.hidden < 1) throw ContractError("hidden size must be >= 1");
  m.params = RecurrentNet::init(m.input_dim, spec.hidden, spec.horizon, derive_seed(hyper.seed, {0xC311})).params;
  if (report) report->loss.push_back(detail::dataset_loss(m, data));
  detail::sgd(m, data, hyper, hyper.learning_rate, 0, report);
  return m;
}

/// Uncorrected model prediction in target units (no flooring).
inline std::vector<double> predict_raw(const ForecastModel& m, const Sample& input) {
  const Vector out = detail::raw_output(m, input);
  std::vector<double> y(m.spec.horizon);
  for (std::size_t h = 0; h < y.size(); ++h) y[h] = m.output.denormalize(0, out(static_cast<Eigen::Index>(h)));
  return y;
}

/// First `horizon_T` steps of the forecast, after the SelfAdapt correction.
/// Solar and load forecasts are floored at zero.
inline std::vector<double> predict(const ForecastModel& m, const Sample& input, std::size_t horizon_T) {
  if (horizon_T < 1 || horizon_T > m.spec.horizon)
    throw ShapeError("requested horizon " + std::to_string(horizon_T) + " outside [1, " +
                     std::to_string(m.spec.horizon) + "]");
  auto y = predict_raw(m, input);
  y.resize(horizon_T);
  const bool floor = m.spec.target != Target::price;
  for (auto& v : y) {
    v = m.correction_a * v + m.correction_b;
    if (floor) v = std::max(v, 0.0);
  }
  return y;
}

struct UncertaintyEstimate {
  std::vector<double> sigma;  // per horizon step
};

/// Population standard deviation of (actual - predicted) per horizon step.
inline UncertaintyEstimate estimate_variance(const ForecastModel& m, const std::vector<Sample>& validation) {
  if (validation.size() < 2) throw ContractError("variance needs at least 2 validation windows");
  const std::size_t H = m.spec.horizon;
  std::vector<double> sum(H, 0.0), sq(H, 0.0);
  for (const auto& s : validation) {
    if (s.target.size() != H) throw ShapeError("validation target length differs from model horizon");
    const auto p = predict(m, s, H);
    for (std::size_t h = 0; h < H; ++h) {
      const double e = s.target[h] - p[h];
      sum[h] += e;
      sq[h] += e * e;
    }
  }
  const double n = static_cast<double>(validation.size());
  UncertaintyEstimate u;
  u.sigma.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    const double mean = sum[h] / n;
    u.sigma[h] = std::sqrt(std::max(0.0, sq[h] / n - mean * mean));
  }
  return u;
}

/// Least-squares (a, b) minimising sum (a * predicted + b - actual)^2. A
/// constant prediction yields a = 1 and the mean offset.
inline std::pair<double, double> fit_linear_correction(const std::vector<double>& predicted,
                                                       const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || predicted.empty()) throw ShapeError("correction needs aligned, nonempty data");
  const double n = static_cast<double>(predicted.size());
  double mp = 0.0, ma = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    mp += predicted[i];
    ma += actual[i];
  }
  mp /= n;
  ma /= n;
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    cov += (predicted[i] - mp) * (actual[i] - ma);
    var += (predicted[i] - mp) * (predicted[i] - mp);
  }
  if (var <= 1e-12 * n * (1.0 + mp * mp)) return {1.0, ma - mp};
  const double a = cov / var;
  return {a, ma - a * mp};
}

enum class SchemeKind { NoFt, SelfAdapt, Scratch, SmallLR, Freeze };

inline std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::NoFt: return "noft";
    case SchemeKind::SelfAdapt: return "selfadapt";
    case SchemeKind::Scratch: return "scratch";
    case SchemeKind::SmallLR: return "smalllr";
    default: return "freeze";
  }
}
inline SchemeKind parse_scheme(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  for (auto k : {SchemeKind::NoFt, SchemeKind::SelfAdapt, SchemeKind::Scratch, SchemeKind::SmallLR, SchemeKind::Freeze})
    if (to_string(k) == s) return k;
  throw ContractError("unknown update scheme '" + s + "' (noft|selfadapt|scratch|smalllr|freeze)");
}

struct UpdateScheme {
  SchemeKind kind = SchemeKind::SmallLR;
  double lr_multiplier = 0.1;          // SmallLR
  std::size_t correction_window = 72;  // SelfAdapt, in samples

  void validate() const {
    if (!(lr_multiplier > 0.0 && lr_multiplier <= 1.0)) throw ContractError("lr_multiplier must lie in (0, 1]");
    if (correction_window < 1) throw ContractError("correction_window must be >= 1");
  }
};

/// Returns the updated model; the input is never modified. `pretrain` is the
/// original training set and is only used by Scratch.
inline ForecastModel apply_update(const ForecastModel& model, const UpdateScheme& scheme,
                                  const std::vector<Sample>& online, const TrainHyper& hyper,
                                  const std::vector<Sample>& pretrain = {}) {
  scheme.validate();
  if (scheme.kind == SchemeKind::NoFt) return model;
  if (online.empty()) throw ContractError("online update needs data");
  detail::check_dataset(model.spec, online);
  ForecastModel m = model;
  switch (scheme.kind) {
    case SchemeKind::SelfAdapt: {
      if (scheme.correction_window > online.size())
        throw ContractError("SelfAdapt window " + std::to_string(scheme.correction_window) + " exceeds the " +
                            std::to_string(online.size()) + " available samples");
      std::vector<double> p, a;
      for (std::size_t i = online.size() - scheme.correction_window; i < online.size(); ++i) {
        const auto y = predict_raw(model, online[i]);
        p.insert(p.end(), y.begin(), y.end());
        a.insert(a.end(), online[i].target.begin(), online[i].target.end());
      }
      std::tie(m.correction_a, m.correction_b) = fit_linear_correction(p, a);
      return m;
    }
    case SchemeKind::Scratch: {
      std::vector<Sample> all = pretrain;
      all.insert(all.end(), online.begin(), online.end());
      return train(model.spec, all, hyper);
    }
    case SchemeKind::SmallLR:
      detail::sgd(m, online, hyper, hyper.learning_rate * scheme.lr_multiplier, 0, nullptr);
      return m;
    case SchemeKind::Freeze:
      if (m.spec.kind == ModelKind::linear) {
        detail::sgd(m, online, hyper, hyper.learning_rate, 0, nullptr);
      } else {
        detail::sgd(m, online, hyper, hyper.learning_rate, m.readout_offset(), nullptr);
      }
      return m;
    default: return m;
  }
}

// Checkpoint text format:
//   SOFO-FORECAST <version>
//   spec <kind> <target> <lags> <horizon> <hidden> <input_dim>
//   correction <a> <b>
//   input_norm <n> <mean...> <scale...>
//   output_norm <mean> <scale>
//   blocks <count>
//   <name> <rows> <cols>          (one line per block)
//   params <count>
//   <value>                        (one per line, row-major per block)
// Numbers use 17 significant digits so loading reproduces the model exactly.

inline constexpr int kCheckpointVersion = 1;

inline std::vector<ParamBlock> parameter_blocks(const ForecastModel& m) {
  if (m.spec.kind == ModelKind::recurrent) return RecurrentNet::layout(m.input_dim, m.spec.hidden, m.spec.horizon);
  const std::size_t D = m.linear_width(), H = m.spec.horizon;
  return {{"W", H, D, 0}, {"b", H, 1, H * D}};
}

inline std::string save_checkpoint(const ForecastModel& m) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "SOFO-FORECAST " << kCheckpointVersion << "\n";
  out << "spec " << to_string(m.spec.kind) << " " << to_string(m.spec.target) << " " << m.spec.lags << " "
      << m.spec.horizon << " " << m.spec.hidden << " " << m.input_dim << "\n";
  out << "correction " << num(m.correction_a) << " " << num(m.correction_b) << "\n";
  out << "input_norm " << m.input.mean.size();
  for (double v : m.input.mean) out << " " << num(v);
  for (double v : m.input.scale) out << " " << num(v);
  out << "\noutput_norm " << num(m.output.mean.at(0)) << " " << num(m.output.scale.at(0)) << "\n";
  const auto blocks = parameter_blocks(m);
  out << "blocks " << blocks.size() << "\n";
  for (const auto& b : blocks) out << b.name << " " << b.rows << " " << b.cols << "\n";
  out << "params " << m.params.size() << "\n";
  for (double v : m.params) out << num(v) << "\n";
  return out.str();
}

inline ForecastModel load_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  int version = 0;
  auto expect = [&](const char* key) {
    if (!(in >> word) || word != key) throw ParseError("checkpoint", -1, std::string("expected '") + key + "'");
  };
  expect("SOFO-FORECAST");
  if (!(in >> version) || version != kCheckpointVersion)
    throw ParseError("checkpoint", -1, "unsupported version " + std::to_string(version));
  ForecastModel m;
  std::string kind, target;
  expect("spec");
  in >> kind >> target >> m.spec.lags >> m.spec.horizon >> m.spec.hidden >> m.input_dim;
  m.spec.kind = parse_model_kind(kind);
  m.spec.target = parse_target(target);
  expect("correction");
  in >> m.correction_a >> m.correction_b;
  expect("input_norm");
  std::size_t n = 0;
  in >> n;
  m.input.mean.resize(n);
  m.input.scale.resize(n);
  for (auto& v : m.input.mean) in >> v;
  for (auto& v : m.input.scale) in >> v;
  expect("output_norm");
  m.output.mean.resize(1);
  m.output.scale.resize(1);
  in >> m.output.mean[0] >> m.output.scale[0];
  expect("blocks");
  std::size_t nb = 0;
  in >> nb;
  std::size_t total = 0;
  for (std::size_t i = 0; i < nb; ++i) {
    std::size_t r = 0, c = 0;
    in >> word >> r >> c;
    total += r * c;
  }
  expect("params");
  std::size_t np = 0;
  in >> np;
  if (!in || np != total) throw ParseError("checkpoint", -1, "parameter count does not match the shape table");
  m.params.resize(np);
  for (auto& v : m.params)
    if (!(in >> v)) throw ParseError("checkpoint", -1, "truncated parameter list");
  const auto expected = parameter_blocks(m);
  std::size_t want = 0;
  for (const auto& b : expected) want += b.size();
  if (want != np) throw ParseError("checkpoint", -1, "shape table inconsistent with model spec");
  return m;
}

}  // namespace sofo::forecast

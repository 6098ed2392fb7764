#pragma once

// Gated recurrent cell with an affine multi-step readout.
//
//   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//   n_t = tanh(W_n x_t + U_n (r_t * h_{t-1}) + b_n)
//   h_t = (1 - z_t) * n_t + z_t * h_{t-1},   h_0 = 0
//   y   = W_o h_T + b_o
//
// Parameters live in one flat vector; `layout` gives each block's offset and
// row-major shape.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sofo/errors.hpp"
#include "sofo/rng.hpp"

namespace sofo::forecast {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct ParamBlock {
  std::string name;
  std::size_t rows = 0, cols = 0, offset = 0;
  std::size_t size() const { return rows * cols; }
};

struct RecurrentNet {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_horizon = 0;
  std::vector<double> params;

  static std::vector<ParamBlock> layout(std::size_t I, std::size_t H, std::size_t O) {
    std::vector<ParamBlock> out;
    std::size_t off = 0;
    auto add = [&](const std::string& name, std::size_t r, std::size_t c) {
      out.push_back({name, r, c, off});
      off += r * c;
    };
    for (const char* g : {"z", "r", "n"}) {
      add(std::string("W_") + g, H, I);
      add(std::string("U_") + g, H, H);
      add(std::string("b_") + g, H, 1);
    }
    add("W_o", O, H);
    add("b_o", O, 1);
    return out;
  }
  std::vector<ParamBlock> layout() const { return layout(input_dim, hidden_dim, output_horizon); }

  static std::size_t param_count(std::size_t I, std::size_t H, std::size_t O) {
    return 3 * (H * I + H * H + H) + O * H + O;
  }
  /// First index of the readout parameters (W_o, b_o); the cell precedes it.
  std::size_t readout_offset() const { return 3 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim); }

  /// PyTorch-style uniform(-1/sqrt(H), 1/sqrt(H)) initialisation.
  static RecurrentNet init(std::size_t I, std::size_t H, std::size_t O, std::uint64_t seed) {
    if (I == 0 || H == 0 || O == 0) throw ShapeError("recurrent net dimensions must be positive");
    RecurrentNet net{I, H, O, {}};
    net.params.resize(param_count(I, H, O));
    Rng rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(H));
    std::uniform_real_distribution<double> u(-k, k);
    for (auto& p : net.params) p = u(rng);
    return net;
  }
};

namespace detail {

using CMap = Eigen::Map<const Matrix>;
using MMap = Eigen::Map<Matrix>;
using CVMap = Eigen::Map<const Vector>;
using VMap = Eigen::Map<Vector>;

template <class Map, class VM, class Ptr>
auto views(Ptr base, std::size_t I, std::size_t H, std::size_t O) {
  struct V {
    std::array<Map, 3> W, U;
    std::array<VM, 3> b;
    Map W_o;
    VM b_o;
  };
  const auto L = RecurrentNet::layout(I, H, O);
  auto m = [&](std::size_t i) { return Map(base + L[i].offset, static_cast<Eigen::Index>(L[i].rows), static_cast<Eigen::Index>(L[i].cols)); };
  auto v = [&](std::size_t i) { return VM(base + L[i].offset, static_cast<Eigen::Index>(L[i].rows)); };
  return V{{m(0), m(3), m(6)}, {m(1), m(4), m(7)}, {v(2), v(5), v(8)}, m(9), v(10)};
}

}  // namespace detail

/// Per-step activations of a batch, one column per sequence. h[0] = 0 and
/// h[j+1] is the state after step j.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> h, z, r, n;
};

struct ForwardResult {
  std::vector<double> predictions;
  std::vector<double> hidden;
};

namespace detail {

inline void check_net(const RecurrentNet& net) {
  if (net.params.size() != RecurrentNet::param_count(net.input_dim, net.hidden_dim, net.output_horizon))
    throw ShapeError("parameter vector size mismatch");
}

// Step j of every sequence as the columns of an I x B matrix.
inline Eigen::MatrixXd step_inputs(const std::vector<const Matrix*>& seqs, Eigen::Index j) {
  Eigen::MatrixXd x(seqs.front()->cols(), static_cast<Eigen::Index>(seqs.size()));
  for (std::size_t b = 0; b < seqs.size(); ++b) x.col(static_cast<Eigen::Index>(b)) = seqs[b]->row(j).transpose();
  return x;
}

}  // namespace detail

/// Runs the cell over a batch of equally long sequences (one row per step)
/// and returns the readout, one column per sequence.
inline Eigen::MatrixXd forward_batch(const RecurrentNet& net, const std::vector<const Matrix*>& seqs,
                                     ForwardCache* cache = nullptr) {
  const auto I = net.input_dim, H = net.hidden_dim, O = net.output_horizon;
  if (seqs.empty() || seqs.front()->rows() == 0) throw ShapeError("recurrent forward needs a nonempty sequence");
  detail::check_net(net);
  const Eigen::Index steps = seqs.front()->rows();
  for (const auto* s : seqs) {
    if (static_cast<std::size_t>(s->cols()) != I)
      throw ShapeError("sequence element has " + std::to_string(s->cols()) + " features, net expects " +
                       std::to_string(I));
    if (s->rows() != steps) throw ShapeError("sequences in a batch must have equal length");
  }
  auto P = detail::views<detail::CMap, detail::CVMap>(net.params.data(), I, H, O);
  const auto B = static_cast<Eigen::Index>(seqs.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(H), B);
  if (cache) {
    cache->h.assign(1, h);
    cache->z.clear();
    cache->r.clear();
    cache->n.clear();
  }
  Eigen::MatrixXd z, r, n;
  for (Eigen::Index j = 0; j < steps; ++j) {
    const Eigen::MatrixXd x = detail::step_inputs(seqs, j);
    z.noalias() = P.W[0] * x;
    z.noalias() += P.U[0] * h;
    z.colwise() += P.b[0];
    z = (1.0 + (-z.array()).exp()).inverse().matrix();
    r.noalias() = P.W[1] * x;
    r.noalias() += P.U[1] * h;
    r.colwise() += P.b[1];
    r = (1.0 + (-r.array()).exp()).inverse().matrix();
    const Eigen::MatrixXd rh = r.cwiseProduct(h);
    n.noalias() = P.W[2] * x;
    n.noalias() += P.U[2] * rh;
    n.colwise() += P.b[2];
    n = n.array().tanh().matrix();
    h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    if (cache) {
      cache->z.push_back(z);
      cache->r.push_back(r);
      cache->n.push_back(n);
      cache->h.push_back(h);
    }
  }
  Eigen::MatrixXd y = P.W_o * h;
  y.colwise() += P.b_o;
  return y;
}

/// Accumulates dL/dparams into `grad` given dL/dy (O x B) for a batch run
/// through forward_batch with a cache.
inline void backward_batch(const RecurrentNet& net, const std::vector<const Matrix*>& seqs, const ForwardCache& cache,
                           const Eigen::MatrixXd& dy, std::vector<double>& grad) {
  const auto I = net.input_dim, H = net.hidden_dim, O = net.output_horizon;
  if (grad.size() != net.params.size()) throw ShapeError("gradient buffer size mismatch");
  auto P = detail::views<detail::CMap, detail::CVMap>(net.params.data(), I, H, O);
  auto G = detail::views<detail::MMap, detail::VMap>(grad.data(), I, H, O);
  const auto steps = static_cast<Eigen::Index>(cache.z.size());
  G.W_o.noalias() += dy * cache.h.back().transpose();
  G.b_o += dy.rowwise().sum();
  Eigen::MatrixXd dh = P.W_o.transpose() * dy;
  Eigen::MatrixXd dh_prev, da_n, da_z, da_r, drh;
  for (Eigen::Index j = steps - 1; j >= 0; --j) {
    const auto uj = static_cast<std::size_t>(j);
    const Eigen::MatrixXd x = detail::step_inputs(seqs, j);
    const auto hp = cache.h[uj].array();
    const auto z = cache.z[uj].array();
    const auto r = cache.r[uj].array();
    const auto n = cache.n[uj].array();
    const auto d = dh.array();

    da_n = (d * (1.0 - z) * (1.0 - n * n)).matrix();
    da_z = (d * (hp - n) * z * (1.0 - z)).matrix();
    dh_prev = (d * z).matrix();

    G.W[2].noalias() += da_n * x.transpose();
    G.U[2].noalias() += da_n * (r * hp).matrix().transpose();
    G.b[2] += da_n.rowwise().sum();
    drh.noalias() = P.U[2].transpose() * da_n;
    dh_prev += (drh.array() * r).matrix();
    da_r = (drh.array() * hp * r * (1.0 - r)).matrix();

    G.W[0].noalias() += da_z * x.transpose();
    G.U[0].noalias() += da_z * cache.h[uj].transpose();
    G.b[0] += da_z.rowwise().sum();
    dh_prev.noalias() += P.U[0].transpose() * da_z;

    G.W[1].noalias() += da_r * x.transpose();
    G.U[1].noalias() += da_r * cache.h[uj].transpose();
    G.b[1] += da_r.rowwise().sum();
    dh_prev.noalias() += P.U[1].transpose() * da_r;

    dh.swap(dh_prev);
  }
}

/// Single-sequence forward pass.
inline Vector forward(const RecurrentNet& net, const Matrix& seq, ForwardCache* cache = nullptr) {
  return forward_batch(net, {&seq}, cache).col(0);
}

/// Single-sequence backward pass.
inline void backward(const RecurrentNet& net, const Matrix& seq, const ForwardCache& cache, const Vector& dy,
                     std::vector<double>& grad) {
  backward_batch(net, {&seq}, cache, Eigen::MatrixXd(dy), grad);
}

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ShapeError("ragged sequence");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

/// Predictions and final hidden state for a sequence of input vectors.
inline ForwardResult forward_recurrent(const RecurrentNet& net, const std::vector<std::vector<double>>& sequence) {
  if (sequence.empty()) throw ShapeError("recurrent forward needs a nonempty sequence");
  ForwardCache cache;
  const Vector y = forward(net, to_matrix(sequence), &cache);
  const Vector h = cache.h.back().col(0);
  return {std::vector<double>(y.data(), y.data() + y.size()), std::vector<double>(h.data(), h.data() + h.size())};
}

}  // namespace sofo::forecast

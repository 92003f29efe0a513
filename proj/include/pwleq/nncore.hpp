// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// Dense layers with hand-written backward passes: an LSTM cell (and its scan
// over a sequence) and a no-padding 1-D convolution, plus Adam.
//
// Batched tensors keep one sample per column. A sequence of T steps for B
// samples is stored as a (features x T*B) matrix whose column t*B + b holds
// step t of sample b, so every time step is a contiguous column block.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pwleq/activation_fn.hpp"
#include "pwleq/errors.hpp"

namespace pwleq {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// LSTM

/// Gate rows are stacked in the order (input, forget, cell candidate, output);
/// row block k spans rows [k*H, (k+1)*H).
template <typename Scalar>
struct LstmWeights {
  Matrix<Scalar> W;  // 4H x I
  Matrix<Scalar> U;  // 4H x H
  Matrix<Scalar> b;  // 4H x 1

  static LstmWeights zeros(Eigen::Index input, Eigen::Index hidden) {
    return {Matrix<Scalar>::Zero(4 * hidden, input), Matrix<Scalar>::Zero(4 * hidden, hidden),
            Matrix<Scalar>::Zero(4 * hidden, 1)};
  }

  Eigen::Index hidden() const { return U.cols(); }
  Eigen::Index input() const { return W.cols(); }

  void check() const {
    const auto h = hidden();
    detail::require(U.rows() == 4 * h && W.rows() == 4 * h && b.rows() == 4 * h && b.cols() == 1,
                    "LstmWeights: W, U, b must have 4H rows (b a column)");
  }
};

template <typename Scalar>
struct LstmCellCache {
  Matrix<Scalar> x, h_prev, c_prev;
  Matrix<Scalar> z;      // 4H x B pre-activations
  Matrix<Scalar> gates;  // 4H x B activated (i, f, g, o)
  Matrix<Scalar> c;      // H x B new cell state
  Matrix<Scalar> tc;     // state_act(c)

  bool empty() const { return z.size() == 0; }
};

template <typename Scalar>
struct LstmCellOutput {
  Matrix<Scalar> h, c;
  LstmCellCache<Scalar> cache;
};

template <typename Scalar>
LstmCellOutput<Scalar> lstm_cell_forward(const Matrix<Scalar>& x, const Matrix<Scalar>& h_prev,
                                         const Matrix<Scalar>& c_prev,
                                         const LstmWeights<Scalar>& w, const ActivationFn& gate_act,
                                         const ActivationFn& state_act) {
  w.check();
  const auto H = w.hidden();
  const auto B = x.cols();
  detail::require(x.rows() == w.input(), "lstm_cell_forward: x rows != input size");
  detail::require(h_prev.rows() == H && c_prev.rows() == H && h_prev.cols() == B &&
                      c_prev.cols() == B,
                  "lstm_cell_forward: state shape mismatch");

  LstmCellOutput<Scalar> out;
  auto& k = out.cache;
  k.x = x;
  k.h_prev = h_prev;
  k.c_prev = c_prev;
  k.z.noalias() = w.W * x;
  k.z.noalias() += w.U * h_prev;
  k.z.colwise() += w.b.col(0);
  k.gates.resize(4 * H, B);
  k.gates.topRows(2 * H) = gate_act.apply(k.z.topRows(2 * H));
  k.gates.middleRows(2 * H, H) = state_act.apply(k.z.middleRows(2 * H, H));
  k.gates.bottomRows(H) = gate_act.apply(k.z.bottomRows(H));

  const auto i = k.gates.topRows(H).array();
  const auto f = k.gates.middleRows(H, H).array();
  const auto g = k.gates.middleRows(2 * H, H).array();
  const auto o = k.gates.bottomRows(H).array();
  k.c = (f * c_prev.array() + i * g).matrix();
  k.tc = state_act.apply(k.c);
  out.h = (o * k.tc.array()).matrix();
  out.c = k.c;
  return out;
}

template <typename Scalar>
struct LstmCellGradients {
  Matrix<Scalar> x, h_prev, c_prev;
};

/// Reverse-mode step. Parameter gradients are accumulated into `grad`, which
/// must already be shaped like `w`.
template <typename Scalar>
LstmCellGradients<Scalar> lstm_cell_backward(const Matrix<Scalar>& dh, const Matrix<Scalar>& dc_next,
                                             const LstmCellCache<Scalar>& cache,
                                             const LstmWeights<Scalar>& w,
                                             const ActivationFn& gate_act,
                                             const ActivationFn& state_act,
                                             LstmWeights<Scalar>& grad) {
  if (cache.empty()) throw UsageError("lstm_cell_backward: empty cache (no forward call)");
  const auto H = w.hidden();
  const auto B = cache.x.cols();
  detail::require(dh.rows() == H && dh.cols() == B && dc_next.rows() == H && dc_next.cols() == B,
                  "lstm_cell_backward: upstream gradient shape mismatch");
  detail::require(grad.W.rows() == w.W.rows() && grad.W.cols() == w.W.cols() &&
                      grad.U.rows() == w.U.rows() && grad.U.cols() == w.U.cols() &&
                      grad.b.rows() == w.b.rows(),
                  "lstm_cell_backward: gradient accumulator shape mismatch");

  const auto i = cache.gates.topRows(H).array();
  const auto f = cache.gates.middleRows(H, H).array();
  const auto g = cache.gates.middleRows(2 * H, H).array();
  const auto o = cache.gates.bottomRows(H).array();

  const Matrix<Scalar> dtc = state_act.derivative(cache.c, cache.tc);
  const Matrix<Scalar> dc = (dc_next.array() + dh.array() * o * dtc.array()).matrix();

  Matrix<Scalar> dgates(4 * H, B);
  dgates.topRows(H) = (dc.array() * g).matrix();
  dgates.middleRows(H, H) = (dc.array() * cache.c_prev.array()).matrix();
  dgates.middleRows(2 * H, H) = (dc.array() * i).matrix();
  dgates.bottomRows(H) = (dh.array() * cache.tc.array()).matrix();

  Matrix<Scalar> dz(4 * H, B);
  dz.topRows(2 * H) = (dgates.topRows(2 * H).array() *
                       gate_act.derivative(cache.z.topRows(2 * H), cache.gates.topRows(2 * H)).array())
                          .matrix();
  dz.middleRows(2 * H, H) =
      (dgates.middleRows(2 * H, H).array() *
       state_act.derivative(cache.z.middleRows(2 * H, H), cache.gates.middleRows(2 * H, H)).array())
          .matrix();
  dz.bottomRows(H) =
      (dgates.bottomRows(H).array() *
       gate_act.derivative(cache.z.bottomRows(H), cache.gates.bottomRows(H)).array())
          .matrix();

  grad.W.noalias() += dz * cache.x.transpose();
  grad.U.noalias() += dz * cache.h_prev.transpose();
  grad.b.col(0) += dz.rowwise().sum();

  LstmCellGradients<Scalar> out;
  out.x.noalias() = w.W.transpose() * dz;
  out.h_prev.noalias() = w.U.transpose() * dz;
  out.c_prev = (dc.array() * f).matrix();
  return out;
}

/// Everything a scan keeps for the backward pass, one column block of `batch`
/// columns per time step (in time order regardless of scan direction).
template <typename Scalar>
struct LstmTrace {
  Eigen::Index steps = 0, batch = 0;
  bool reverse = false;
  Matrix<Scalar> xs;      // I x steps*batch
  Matrix<Scalar> z;       // 4H x steps*batch pre-activations
  Matrix<Scalar> gates;   // 4H x steps*batch (i, f, g, o)
  Matrix<Scalar> c;       // H x steps*batch
  Matrix<Scalar> tc;      // state_act(c)
  Matrix<Scalar> hidden;  // H x steps*batch
  long flat_count = 0;    // pre-activations in zero-slope segments
  long act_count = 0;     // pre-activations evaluated
};

/// Scans the cell over `steps` time steps starting from zero state; with
/// `reverse` the scan runs from the last step to the first. Computes the same
/// values as repeated lstm_cell_forward calls, with the input projection done
/// as one product.
template <typename Scalar>
LstmTrace<Scalar> lstm_sequence_forward(const LstmWeights<Scalar>& w, const Matrix<Scalar>& xs,
                                        Eigen::Index steps, Eigen::Index batch, bool reverse,
                                        const ActivationFn& gate_act,
                                        const ActivationFn& state_act) {
  w.check();
  detail::require(xs.rows() == w.input(), "lstm_sequence_forward: xs rows != input size");
  detail::require(xs.cols() == steps * batch, "lstm_sequence_forward: xs cols != steps*batch");
  const auto H = w.hidden();
  const auto B = batch;
  LstmTrace<Scalar> tr;
  tr.steps = steps;
  tr.batch = batch;
  tr.reverse = reverse;
  tr.xs = xs;
  tr.z.noalias() = w.W * xs;
  tr.z.colwise() += w.b.col(0);
  tr.gates.resize(4 * H, steps * B);
  tr.c.resize(H, steps * B);
  tr.tc.resize(H, steps * B);
  tr.hidden.resize(H, steps * B);
  Matrix<Scalar> c_prev = Matrix<Scalar>::Zero(H, B);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    auto z = tr.z.middleCols(t * B, B);
    if (s > 0) {
      const Eigen::Index tp = reverse ? t + 1 : t - 1;
      z.noalias() += w.U * tr.hidden.middleCols(tp * B, B);
    }
    auto gates = tr.gates.middleCols(t * B, B);
    gates.topRows(2 * H) = gate_act.apply(z.topRows(2 * H));
    gates.middleRows(2 * H, H) = state_act.apply(z.middleRows(2 * H, H));
    gates.bottomRows(H) = gate_act.apply(z.bottomRows(H));
    auto c = tr.c.middleCols(t * B, B);
    c = (gates.middleRows(H, H).array() * c_prev.array() +
         gates.topRows(H).array() * gates.middleRows(2 * H, H).array())
            .matrix();
    auto tc = tr.tc.middleCols(t * B, B);
    tc = state_act.apply(c);
    tr.hidden.middleCols(t * B, B) = (gates.bottomRows(H).array() * tc.array()).matrix();
    c_prev = c;
  }
  tr.flat_count = gate_act.count_flat(tr.z.topRows(2 * H)) + gate_act.count_flat(tr.z.bottomRows(H)) +
                  state_act.count_flat(tr.z.middleRows(2 * H, H)) + state_act.count_flat(tr.c);
  tr.act_count = 5 * H * B * steps;
  return tr;
}

/// Backpropagation through time for a trace. `dhidden` is the loss gradient
/// w.r.t. every hidden state (H x steps*batch). Returns the input gradient and
/// accumulates parameter gradients into `grad`.
template <typename Scalar>
Matrix<Scalar> lstm_sequence_backward(const LstmWeights<Scalar>& w, const LstmTrace<Scalar>& tr,
                                      const Matrix<Scalar>& dhidden, const ActivationFn& gate_act,
                                      const ActivationFn& state_act, LstmWeights<Scalar>& grad) {
  if (tr.z.size() == 0) throw UsageError("lstm_sequence_backward: empty trace (no forward call)");
  const auto H = w.hidden();
  const auto B = tr.batch;
  const auto n = tr.steps * B;
  detail::require(dhidden.rows() == H && dhidden.cols() == n,
                  "lstm_sequence_backward: dhidden shape mismatch");
  detail::require(grad.W.rows() == w.W.rows() && grad.W.cols() == w.W.cols() &&
                      grad.U.rows() == w.U.rows() && grad.U.cols() == w.U.cols() &&
                      grad.b.rows() == w.b.rows(),
                  "lstm_sequence_backward: gradient accumulator shape mismatch");

  Matrix<Scalar> dact(4 * H, n);
  dact.topRows(2 * H) = gate_act.derivative(tr.z.topRows(2 * H), tr.gates.topRows(2 * H));
  dact.middleRows(2 * H, H) = state_act.derivative(tr.z.middleRows(2 * H, H), tr.gates.middleRows(2 * H, H));
  dact.bottomRows(H) = gate_act.derivative(tr.z.bottomRows(H), tr.gates.bottomRows(H));
  const Matrix<Scalar> dtc = state_act.derivative(tr.c, tr.tc);

  Matrix<Scalar> dz(4 * H, n);
  Matrix<Scalar> h_prev = Matrix<Scalar>::Zero(H, n);
  Matrix<Scalar> dh_carry = Matrix<Scalar>::Zero(H, B);
  Matrix<Scalar> dc_carry = Matrix<Scalar>::Zero(H, B);
  Matrix<Scalar> dh(H, B), dc(H, B);
  for (Eigen::Index s = tr.steps - 1; s >= 0; --s) {
    const Eigen::Index t = tr.reverse ? tr.steps - 1 - s : s;
    const auto cols = [&](const Matrix<Scalar>& m, Eigen::Index rows0, Eigen::Index rows) {
      return m.block(rows0, t * B, rows, B).array();
    };
    dh = dhidden.middleCols(t * B, B) + dh_carry;
    const auto i = cols(tr.gates, 0, H);
    const auto f = cols(tr.gates, H, H);
    const auto g = cols(tr.gates, 2 * H, H);
    const auto o = cols(tr.gates, 3 * H, H);
    dc = (dc_carry.array() + dh.array() * o * cols(dtc, 0, H)).matrix();
    auto dzt = dz.middleCols(t * B, B);
    dzt.topRows(H) = (dc.array() * g * cols(dact, 0, H)).matrix();
    if (s > 0) {
      const Eigen::Index tp = tr.reverse ? t + 1 : t - 1;
      dzt.middleRows(H, H) = (dc.array() * tr.c.middleCols(tp * B, B).array() * cols(dact, H, H)).matrix();
      h_prev.middleCols(t * B, B) = tr.hidden.middleCols(tp * B, B);
    } else {
      dzt.middleRows(H, H).setZero();
    }
    dzt.middleRows(2 * H, H) = (dc.array() * i * cols(dact, 2 * H, H)).matrix();
    dzt.bottomRows(H) = (dh.array() * cols(tr.tc, 0, H) * cols(dact, 3 * H, H)).matrix();
    dh_carry.noalias() = w.U.transpose() * dzt;
    dc_carry = (dc.array() * f).matrix();
  }
  grad.W.noalias() += dz * tr.xs.transpose();
  grad.U.noalias() += dz * h_prev.transpose();
  grad.b.col(0) += dz.rowwise().sum();
  Matrix<Scalar> dx;
  dx.noalias() = w.W.transpose() * dz;
  return dx;
}

// ---------------------------------------------------------------------------
// 1-D convolution (cross-correlation, stride 1, no padding)

template <typename Scalar>
struct Conv1dWeights {
  std::vector<Matrix<Scalar>> taps;  // Klen matrices of Cout x Cin
  Matrix<Scalar> bias;               // Cout x 1

  static Conv1dWeights zeros(Eigen::Index out_channels, Eigen::Index in_channels,
                             Eigen::Index length) {
    Conv1dWeights w;
    w.taps.assign(static_cast<std::size_t>(length), Matrix<Scalar>::Zero(out_channels, in_channels));
    w.bias = Matrix<Scalar>::Zero(out_channels, 1);
    return w;
  }

  Eigen::Index length() const { return static_cast<Eigen::Index>(taps.size()); }
  Eigen::Index out_channels() const { return bias.rows(); }
  Eigen::Index in_channels() const { return taps.empty() ? 0 : taps.front().cols(); }

  /// Kernel element [co, ci, k].
  Scalar& operator()(Eigen::Index co, Eigen::Index ci, Eigen::Index k) { return taps[k](co, ci); }
  Scalar operator()(Eigen::Index co, Eigen::Index ci, Eigen::Index k) const { return taps[k](co, ci); }

  void check() const {
    detail::require(!taps.empty() && bias.cols() == 1, "Conv1dWeights: empty kernel");
    for (const auto& t : taps) {
      detail::require(t.rows() == out_channels() && t.cols() == in_channels(),
                      "Conv1dWeights: taps disagree in shape");
    }
  }
};

/// Batched form on the column layout: `xs` is Cin x T*B, the result is
/// Cout x (T-Klen+1)*B.
template <typename Scalar>
Matrix<Scalar> conv1d_forward_batched(const Matrix<Scalar>& xs, Eigen::Index batch,
                                      const Conv1dWeights<Scalar>& w) {
  w.check();
  const auto klen = w.length();
  detail::require(xs.rows() == w.in_channels(), "conv1d: channel mismatch");
  detail::require(batch > 0 && xs.cols() % batch == 0, "conv1d: columns not a multiple of batch");
  const auto steps = xs.cols() / batch;
  detail::require(steps >= klen, "conv1d: sequence shorter than kernel");
  const auto out_cols = (steps - klen + 1) * batch;
  const auto cout = w.out_channels();
  // All taps in one product, then sum the shifted row blocks.
  Matrix<Scalar> stacked(klen * cout, w.in_channels());
  for (Eigen::Index k = 0; k < klen; ++k) stacked.middleRows(k * cout, cout) = w.taps[k];
  Matrix<Scalar> y;
  y.noalias() = stacked * xs;
  Matrix<Scalar> out = w.bias.col(0).replicate(1, out_cols);
  for (Eigen::Index k = 0; k < klen; ++k) out += y.block(k * cout, k * batch, cout, out_cols);
  return out;
}

/// Returns the input gradient; kernel and bias gradients accumulate into `grad`.
template <typename Scalar>
Matrix<Scalar> conv1d_backward_batched(const Matrix<Scalar>& dout, const Matrix<Scalar>& xs,
                                       Eigen::Index batch, const Conv1dWeights<Scalar>& w,
                                       Conv1dWeights<Scalar>& grad) {
  const auto klen = w.length();
  const auto out_cols = xs.cols() - (klen - 1) * batch;
  detail::require(dout.rows() == w.out_channels() && dout.cols() == out_cols,
                  "conv1d_backward: upstream gradient shape mismatch");
  detail::require(grad.length() == klen && grad.bias.rows() == w.out_channels(),
                  "conv1d_backward: gradient accumulator shape mismatch");
  const auto cout = w.out_channels();
  Matrix<Scalar> stacked(klen * cout, w.in_channels());
  for (Eigen::Index k = 0; k < klen; ++k) stacked.middleRows(k * cout, cout) = w.taps[k];
  Matrix<Scalar> dy = Matrix<Scalar>::Zero(klen * cout, xs.cols());
  for (Eigen::Index k = 0; k < klen; ++k) dy.block(k * cout, k * batch, cout, out_cols) = dout;
  Matrix<Scalar> dx;
  dx.noalias() = stacked.transpose() * dy;
  Matrix<Scalar> dstacked;
  dstacked.noalias() = dy * xs.transpose();
  for (Eigen::Index k = 0; k < klen; ++k) grad.taps[k] += dstacked.middleRows(k * cout, cout);
  grad.bias.col(0) += dout.rowwise().sum();
  return dx;
}

/// out[t, co] = bias[co] + sum_{k, ci} x[t + k, ci] * kernels[co, ci, k], with
/// x laid out T x Cin.
template <typename Scalar>
Matrix<Scalar> conv1d_forward(const Matrix<Scalar>& x, const Conv1dWeights<Scalar>& w) {
  detail::require(x.rows() >= w.length(), "conv1d_forward: T < kernel length");
  return conv1d_forward_batched<Scalar>(x.transpose(), 1, w).transpose();
}

template <typename Scalar>
Matrix<Scalar> conv1d_backward(const Matrix<Scalar>& dout, const Matrix<Scalar>& x,
                               const Conv1dWeights<Scalar>& w, Conv1dWeights<Scalar>& grad) {
  detail::require(dout.cols() == w.out_channels() && dout.rows() == x.rows() - w.length() + 1,
                  "conv1d_backward: upstream gradient shape mismatch");
  return conv1d_backward_batched<Scalar>(dout.transpose(), x.transpose(), 1, w, grad).transpose();
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<Matrix<Scalar>> m, v;
};

/// One bias-corrected Adam update over a parameter list. Moments are created on
/// the first call. A non-finite gradient aborts before anything is modified.
template <typename Scalar>
void adam_step(const std::vector<Matrix<Scalar>*>& params,
               const std::vector<const Matrix<Scalar>*>& grads, AdamState<Scalar>& state) {
  detail::require(params.size() == grads.size(), "adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
    }
  }
  detail::require(state.m.size() == params.size(), "adam_step: state built for other params");
  for (std::size_t i = 0; i < params.size(); ++i) {
    detail::require(params[i]->rows() == grads[i]->rows() && params[i]->cols() == grads[i]->cols() &&
                        state.m[i].rows() == params[i]->rows() &&
                        state.m[i].cols() == params[i]->cols(),
                    "adam_step: tensor " + std::to_string(i) + " shape mismatch");
    if (!grads[i]->allFinite()) {
      throw TrainingError("adam_step: non-finite gradient in tensor " + std::to_string(i) +
                          " at step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const auto& c = state.config;
  const Scalar b1 = static_cast<Scalar>(c.beta1), b2 = static_cast<Scalar>(c.beta2);
  const Scalar corr1 = Scalar(1) - static_cast<Scalar>(std::pow(c.beta1, state.step));
  const Scalar corr2 = Scalar(1) - static_cast<Scalar>(std::pow(c.beta2, state.step));
  const Scalar lr = static_cast<Scalar>(c.lr), eps = static_cast<Scalar>(c.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i]->array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i]->array() -= lr * (m / corr1) / ((v / corr2).sqrt() + eps);
  }
}

}  // namespace pwleq

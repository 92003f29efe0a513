// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// biLSTM + linear Conv1D equalizer. A window of 81 received symbols, given as
// (real, imag) rows, maps to 61 equalized symbols aligned with the transmitted
// symbols at window positions 10..70.

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pwleq/activation_fn.hpp"
#include "pwleq/checkpoint.hpp"
#include "pwleq/nncore.hpp"

namespace pwleq {

inline constexpr int kWindowLength = 81;
inline constexpr int kOutputLength = 61;
inline constexpr int kKernelLength = 21;
inline constexpr int kContext = (kWindowLength - kOutputLength) / 2;
inline constexpr int kHiddenUnits = 35;
inline constexpr int kInputFeatures = 2;
inline constexpr int kOutputChannels = 2;

template <typename Scalar>
struct EqualizerWeights {
  LstmWeights<Scalar> forward;
  LstmWeights<Scalar> backward;
  Conv1dWeights<Scalar> conv;  // Cout = 2, Cin = 2H, Klen = 21

  static EqualizerWeights zeros(Eigen::Index hidden = kHiddenUnits) {
    return {LstmWeights<Scalar>::zeros(kInputFeatures, hidden),
            LstmWeights<Scalar>::zeros(kInputFeatures, hidden),
            Conv1dWeights<Scalar>::zeros(kOutputChannels, 2 * hidden, kKernelLength)};
  }

  Eigen::Index hidden() const { return forward.hidden(); }

  /// Every parameter tensor in a fixed order.
  std::vector<Matrix<Scalar>*> tensors() {
    std::vector<Matrix<Scalar>*> out{&forward.W, &forward.U, &forward.b,
                                     &backward.W, &backward.U, &backward.b};
    for (auto& t : conv.taps) out.push_back(&t);
    out.push_back(&conv.bias);
    return out;
  }

  std::vector<const Matrix<Scalar>*> tensors() const {
    auto mut = const_cast<EqualizerWeights*>(this)->tensors();
    return {mut.begin(), mut.end()};
  }

  void check() const {
    const auto h = hidden();
    forward.check();
    backward.check();
    conv.check();
    detail::require(forward.input() == kInputFeatures && backward.input() == kInputFeatures &&
                        backward.hidden() == h,
                    "EqualizerWeights: LSTM shapes");
    detail::require(conv.out_channels() == kOutputChannels && conv.in_channels() == 2 * h &&
                        conv.length() == kKernelLength,
                    "EqualizerWeights: conv shapes");
  }

  bool all_finite() const {
    for (const auto* t : tensors()) {
      if (!t->allFinite()) return false;
    }
    return true;
  }

  EqualizerWeights& operator+=(const EqualizerWeights& other) {
    auto mine = tensors();
    auto theirs = other.tensors();
    for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
    return *this;
  }
};

using EqualizerParams = EqualizerWeights<double>;

/// Activation pair used by the network: `gate` plays the sigmoid role, `state`
/// the tanh role.
struct ActivationSet {
  enum class Mode { Exact, Pwl };

  ActivationFn gate = ActivationFn::exact(ActivationKind::Sigmoid);
  ActivationFn state = ActivationFn::exact(ActivationKind::Tanh);

  static ActivationSet exact() { return {}; }
  Mode mode() const { return gate.is_pwl() ? Mode::Pwl : Mode::Exact; }
};

/// Replaces both activations by their PWL approximations. The specs' kinds must
/// match their roles.
ActivationSet swap_activations(const ActivationSet& acts_exact, const PwlSpec& sigmoid_spec,
                               const PwlSpec& tanh_spec);

/// Same, with inference through the fixed-point PWL datapath.
ActivationSet swap_activations_fixed(const ActivationSet& acts_exact, const PwlSpec& sigmoid_spec,
                                     const PwlSpec& tanh_spec, FixedFormat io_format,
                                     FixedFormat coeff_format);

/// Glorot-uniform weights and kernels, zero biases except forget gates at 1.
EqualizerParams init_params(std::uint64_t seed, Eigen::Index hidden = kHiddenUnits);

/// Intermediate values of a batched forward pass.
struct BatchForward {
  Eigen::Index batch = 0;
  Matrix<double> inputs;    // 2 x 81*B
  LstmTrace<double> fwd;    // forward-in-time scan
  LstmTrace<double> bwd;    // backward-in-time scan
  Matrix<double> features;  // 2H x 81*B
  Matrix<double> outputs;   // 2 x 61*B

  /// Output of sample b as a 61 x 2 (real, imag) matrix.
  Matrix<double> output(Eigen::Index b) const;
  double flat_fraction() const;
  long flat_count() const { return fwd.flat_count + bwd.flat_count; }
  long act_count() const { return fwd.act_count + bwd.act_count; }
};

BatchForward forward_batch(const EqualizerParams& params, std::span<const Matrix<double>> windows,
                           const ActivationSet& acts);

/// Parameter gradients for the batch given d(loss)/d(outputs) in the same
/// 2 x 61*B layout as BatchForward::outputs.
EqualizerParams backward_batch(const EqualizerParams& params, const BatchForward& fw,
                               const Matrix<double>& doutputs, const ActivationSet& acts);

Matrix<double> equalizer_forward(const EqualizerParams& params, const Matrix<double>& window,
                                 const ActivationSet& acts);

EqualizerParams equalizer_backward(const EqualizerParams& params, const Matrix<double>& window,
                                   const ActivationSet& acts, const Matrix<double>& grad_out);

struct WindowPair {
  Matrix<double> window;  // 81 x 2 received
  Matrix<double> target;  // 61 x 2 transmitted
};

/// Windows of 81 symbols advancing by 61; the trailing remainder is dropped.
std::vector<WindowPair> window_stream(std::span<const std::complex<double>> symbols_rx,
                                      std::span<const std::complex<double>> symbols_tx);

std::size_t window_count(std::size_t n_symbols);

std::vector<NamedTensor> to_named_tensors(const EqualizerParams& params);
EqualizerParams from_named_tensors(const std::vector<NamedTensor>& tensors);

/// Writes `<stem>.ckpt` and the plain-text sidecar `<stem>.meta`.
void save_model(const std::filesystem::path& stem, const EqualizerParams& params,
                const ActivationSet& acts);

struct LoadedModel {
  EqualizerParams params;
  ActivationSet acts;
};

/// Accepts either the stem or the .ckpt path.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace pwleq

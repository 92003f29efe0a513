// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pwleq/channel.hpp"
#include "pwleq/model.hpp"

namespace pwleq {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  /// Stop after this many epochs without a better validation checkpoint; 0 disables.
  int patience = 20;
  /// Fraction of windows used for training; the rest validate.
  double split = 4096.0 / 4608.0;
  /// Abort when this fraction of pre-activations sits in zero-slope segments.
  double tail_guard = 0.9;
  Eigen::Index hidden = kHiddenUnits;

  void validate() const;
};

/// One row per epoch; epoch 0 scores the starting parameters before any update.
struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_q_db = 0.0;
  double tail_fraction = 0.0;
};

struct TrainResult {
  EqualizerParams params;  // best validation checkpoint
  ActivationSet acts;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_q_db = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct WindowSplit {
  std::vector<WindowPair> train;
  std::vector<WindowPair> validation;
};

WindowSplit split_windows(const Dataset& dataset, double split);

/// Mean squared error over all outputs plus its gradient, for a batch of
/// windows. Work is cut into fixed chunks so the summation order does not
/// depend on the thread count.
struct BatchGradient {
  EqualizerParams grads;
  double sum_sq = 0.0;
  std::size_t n_values = 0;
  long flat = 0;
  long activations = 0;
};

BatchGradient batch_gradient(const EqualizerParams& params, const ActivationSet& acts,
                             std::span<const WindowPair> windows,
                             std::span<const std::size_t> indices);

/// Core loop shared by all three regimes: Adam on MSE, best checkpoint chosen
/// by validation Q (ties: lower validation MSE).
TrainResult train(EqualizerParams initial, const ActivationSet& acts, const WindowSplit& data,
                  int qam_order, const TrainConfig& tc, const EpochCallback& on_epoch = {});

/// Exact activations from a seeded initialization.
TrainResult pretrain(const Dataset& dataset, const TrainConfig& tc, const EpochCallback& on_epoch = {});

/// Swaps to the PWL activations and continues from `params`.
TrainResult retrain(const EqualizerParams& params, const PwlSpec& sigmoid_spec,
                    const PwlSpec& tanh_spec, const Dataset& dataset, const TrainConfig& tc,
                    const EpochCallback& on_epoch = {});

/// PWL activations from a seeded initialization.
TrainResult train_scratch(const PwlSpec& sigmoid_spec, const PwlSpec& tanh_spec,
                          const Dataset& dataset, const TrainConfig& tc,
                          const EpochCallback& on_epoch = {});

/// First logged epoch whose validation Q reaches `target_q_db`.
std::optional<int> epochs_to_reach(std::span<const EpochLog> log, double target_q_db);

/// `epoch,train_mse,val_mse,val_q_db,tail_fraction`, header first.
std::string format_training_log(std::span<const EpochLog> log);
std::string format_epoch(const EpochLog& e);

}  // namespace pwleq

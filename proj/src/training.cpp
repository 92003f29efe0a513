// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "pwleq/metrics.hpp"
#include "pwleq/parallel.hpp"
#include "pwleq/rng.hpp"

namespace pwleq {

namespace {

// Windows per gradient chunk. Fixed so results never depend on thread count.
constexpr std::size_t kChunk = 16;
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

struct Score {
  double mse = 0.0;
  QResult q;
  long flat = 0;
  long activations = 0;
};

Matrix<double> stack_targets(std::span<const WindowPair> windows, std::span<const std::size_t> idx) {
  const auto B = static_cast<Eigen::Index>(idx.size());
  Matrix<double> out(kOutputChannels, kOutputLength * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& target = windows[idx[b]].target;
    for (Eigen::Index t = 0; t < kOutputLength; ++t) out.col(t * B + b) = target.row(t).transpose();
  }
  return out;
}

Score score(const EqualizerParams& params, const ActivationSet& acts,
            std::span<const WindowPair> windows, int order) {
  constexpr std::size_t kEvalChunk = 16;
  const std::size_t n_chunks = (windows.size() + kEvalChunk - 1) / kEvalChunk;
  struct Partial {
    double sum_sq = 0.0;
    std::uint64_t errors = 0;
    long flat = 0, activations = 0;
  };
  std::vector<Partial> parts(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t start = c * kEvalChunk;
    const std::size_t end = std::min(windows.size(), start + kEvalChunk);
    std::vector<Matrix<double>> batch;
    for (std::size_t w = start; w < end; ++w) batch.push_back(windows[w].window);
    const auto fw = forward_batch(params, batch, acts);
    auto& p = parts[c];
    for (std::size_t w = start; w < end; ++w) {
      const auto out = fw.output(static_cast<Eigen::Index>(w - start));
      p.sum_sq += (out - windows[w].target).squaredNorm();
      p.errors += bit_errors_between(out, windows[w].target, order);
    }
    p.flat = fw.flat_count();
    p.activations = fw.act_count();
  });
  Partial total;
  for (const auto& p : parts) {
    total.sum_sq += p.sum_sq;
    total.errors += p.errors;
    total.flat += p.flat;
    total.activations += p.activations;
  }
  Score s;
  const double n_values = static_cast<double>(windows.size()) * kOutputLength * kOutputChannels;
  s.mse = total.sum_sq / n_values;
  s.q = q_result(total.errors,
                 static_cast<std::uint64_t>(windows.size()) * kOutputLength * bits_per_symbol(order));
  s.flat = total.flat;
  s.activations = total.activations;
  return s;
}

double fraction(long part, long whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

bool better(double q, double mse, double best_q, double best_mse) {
  return q > best_q || (q == best_q && mse < best_mse);
}

void check_tail(double tail, const TrainConfig& tc, int epoch) {
  if (tail >= tc.tail_guard) {
    throw TrainingError("epoch " + std::to_string(epoch) + ": " + std::to_string(tail) +
                        " of pre-activations sit in zero-slope segments (guard " +
                        std::to_string(tc.tail_guard) + "); gradients have collapsed");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("train: split must lie in (0, 1)");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (patience < 0) throw std::invalid_argument("train: patience must be >= 0");
  if (hidden < 1) throw std::invalid_argument("train: hidden must be >= 1");
}

WindowSplit split_windows(const Dataset& dataset, double split) {
  auto windows = window_stream(dataset.rx, dataset.tx);
  if (windows.size() < 2) throw std::invalid_argument("training needs at least 2 windows");
  auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(windows.size()) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, windows.size() - 1);
  WindowSplit out;
  out.train.assign(std::make_move_iterator(windows.begin()),
                   std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.validation.assign(std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train)),
                        std::make_move_iterator(windows.end()));
  return out;
}

BatchGradient batch_gradient(const EqualizerParams& params, const ActivationSet& acts,
                             std::span<const WindowPair> windows,
                             std::span<const std::size_t> indices) {
  const std::size_t n_chunks = (indices.size() + kChunk - 1) / kChunk;
  const double n_values = static_cast<double>(indices.size()) * kOutputLength * kOutputChannels;
  std::vector<BatchGradient> parts(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    const auto idx = indices.subspan(c * kChunk, std::min(kChunk, indices.size() - c * kChunk));
    std::vector<Matrix<double>> batch;
    for (auto i : idx) batch.push_back(windows[i].window);
    const auto fw = forward_batch(params, batch, acts);
    const Matrix<double> diff = fw.outputs - stack_targets(windows, idx);
    auto& part = parts[c];
    part.sum_sq = diff.squaredNorm();
    part.n_values = static_cast<std::size_t>(diff.size());
    part.grads = backward_batch(params, fw, (2.0 / n_values) * diff, acts);
    part.flat = fw.flat_count();
    part.activations = fw.act_count();
  });
  BatchGradient total = std::move(parts.front());
  for (std::size_t c = 1; c < n_chunks; ++c) {
    total.grads += parts[c].grads;
    total.sum_sq += parts[c].sum_sq;
    total.n_values += parts[c].n_values;
    total.flat += parts[c].flat;
    total.activations += parts[c].activations;
  }
  return total;
}

TrainResult train(EqualizerParams initial, const ActivationSet& acts, const WindowSplit& data,
                  int qam_order, const TrainConfig& tc, const EpochCallback& on_epoch) {
  tc.validate();
  if (data.train.empty() || data.validation.empty()) {
    throw std::invalid_argument("train: both partitions must be non-empty");
  }
  TrainResult result;
  result.acts = acts;
  EqualizerParams params = std::move(initial);

  const auto record = [&](EpochLog e) {
    if (!std::isfinite(e.train_mse) || !std::isfinite(e.val_mse)) {
      throw TrainingError("epoch " + std::to_string(e.epoch) + ": non-finite loss (train " +
                          std::to_string(e.train_mse) + ", val " + std::to_string(e.val_mse) + ")");
    }
    result.log.push_back(e);
    if (on_epoch) on_epoch(e);
  };

  {
    const auto train0 = score(params, acts, data.train, qam_order);
    const auto val0 = score(params, acts, data.validation, qam_order);
    const double tail = fraction(train0.flat, train0.activations);
    record({0, train0.mse, val0.mse, val0.q.q_db, tail});
    check_tail(tail, tc, 0);
    result.params = params;
    result.best_epoch = 0;
    result.best_val_q_db = val0.q.q_db;
  }
  double best_mse = result.log.front().val_mse;

  AdamState<double> adam;
  adam.config.lr = tc.lr;
  std::vector<std::size_t> order(data.train.size());
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(tc.seed, kShuffleStream + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    double sum_sq = 0.0;
    std::size_t n_values = 0;
    long flat = 0, activations = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const auto idx = std::span<const std::size_t>(order).subspan(
          start, std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), order.size() - start));
      auto bg = batch_gradient(params, acts, data.train, idx);
      if (!std::isfinite(bg.sum_sq)) {
        throw TrainingError("epoch " + std::to_string(epoch) + ": non-finite batch loss");
      }
      sum_sq += bg.sum_sq;
      n_values += bg.n_values;
      flat += bg.flat;
      activations += bg.activations;
      adam_step<double>(params.tensors(), std::as_const(bg.grads).tensors(), adam);
    }

    const auto val = score(params, acts, data.validation, qam_order);
    const double tail = fraction(flat, activations);
    record({epoch, sum_sq / static_cast<double>(n_values), val.mse, val.q.q_db, tail});
    check_tail(tail, tc, epoch);
    if (better(val.q.q_db, val.mse, result.best_val_q_db, best_mse)) {
      result.params = params;
      result.best_epoch = epoch;
      result.best_val_q_db = val.q.q_db;
      best_mse = val.mse;
    }
    if (tc.patience > 0 && epoch - result.best_epoch >= tc.patience) break;
  }
  return result;
}

TrainResult pretrain(const Dataset& dataset, const TrainConfig& tc, const EpochCallback& on_epoch) {
  return train(init_params(tc.seed, tc.hidden), ActivationSet::exact(),
               split_windows(dataset, tc.split), dataset.config.qam_order, tc, on_epoch);
}

TrainResult retrain(const EqualizerParams& params, const PwlSpec& sigmoid_spec,
                    const PwlSpec& tanh_spec, const Dataset& dataset, const TrainConfig& tc,
                    const EpochCallback& on_epoch) {
  const auto acts = swap_activations(ActivationSet::exact(), sigmoid_spec, tanh_spec);
  return train(params, acts, split_windows(dataset, tc.split), dataset.config.qam_order, tc, on_epoch);
}

TrainResult train_scratch(const PwlSpec& sigmoid_spec, const PwlSpec& tanh_spec,
                          const Dataset& dataset, const TrainConfig& tc,
                          const EpochCallback& on_epoch) {
  const auto acts = swap_activations(ActivationSet::exact(), sigmoid_spec, tanh_spec);
  return train(init_params(tc.seed, tc.hidden), acts, split_windows(dataset, tc.split),
               dataset.config.qam_order, tc, on_epoch);
}

std::optional<int> epochs_to_reach(std::span<const EpochLog> log, double target_q_db) {
  for (const auto& e : log) {
    if (e.val_q_db >= target_q_db) return e.epoch;
  }
  return std::nullopt;
}

std::string format_epoch(const EpochLog& e) {
  return std::to_string(e.epoch) + "," + format_double(e.train_mse) + "," +
         format_double(e.val_mse) + "," + format_q(e.val_q_db) + "," + format_double(e.tail_fraction);
}

std::string format_training_log(std::span<const EpochLog> log) {
  std::string out = "epoch,train_mse,val_mse,val_q_db,tail_fraction\n";
  for (const auto& e : log) out += format_epoch(e) + "\n";
  return out;
}

}  // namespace pwleq

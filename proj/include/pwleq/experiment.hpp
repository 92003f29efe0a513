// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end workflow: generate data, pre-train with exact activations, swap
// in PWL approximations, re-train, and score everything on a held-out set.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwleq/channel.hpp"
#include "pwleq/fixed_point.hpp"
#include "pwleq/metrics.hpp"
#include "pwleq/training.hpp"

namespace pwleq {

struct PwlSettings {
  /// hard | chord | minimax | auto (hard for 3 segments, minimax otherwise)
  std::string fitter = "auto";
  std::vector<int> segments{3, 5, 7, 9};
  /// Tanh range for chord/minimax; sigmoid uses twice this, since
  /// sigmoid(x) = (1 + tanh(x / 2)) / 2.
  double half_range = 4.0;
  int grid_points = 401;
};

struct ExperimentConfig {
  ChannelConfig channel;
  TrainConfig pretrain;
  TrainConfig retrain;
  TrainConfig scratch;
  PwlSettings pwl;
  std::optional<FixedFormat> fixed_point;  // inference format for PWL rows
  std::size_t test_windows = 512;
  std::filesystem::path output_dir = "pwleq_out";

  ExperimentConfig();
  void validate() const;
  /// Reseeds channel and every training regime.
  void set_seed(std::uint64_t seed);
};

/// Flat `key = value` lines with dotted sections; `#` starts a comment.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string format_experiment_config(const ExperimentConfig& config);

struct PwlPair {
  PwlSpec sigmoid;
  PwlSpec tanh;
};

PwlPair make_specs(const PwlSettings& settings, int segments);
PwlSpec make_spec(ActivationKind kind, const std::string& fitter, int segments, double half_range,
                  int grid_points);

/// Held-out data: same channel, independent seed, test_windows windows.
Dataset make_test_dataset(const ChannelConfig& channel, std::size_t test_windows);

/// Activations used to score a PWL model, honouring the fixed-point option.
ActivationSet inference_activations(const ExperimentConfig& config, const PwlPair& specs);

struct SweepRow {
  std::string label;
  int segments = 0;
  std::string mode;
  QResult result;
};

struct SweepResult {
  QResult unequalized;
  QResult exact;
  std::map<int, QResult> no_retrain;
  std::map<int, QResult> retrained;
  std::vector<SweepRow> rows;
  TrainResult pretrained;
  std::map<int, TrainResult> retrain_runs;
};

/// Writes sweep.csv (flushed per row), pretrained.{ckpt,meta} and
/// log_pretrain.csv / log_retrain_k<K>.csv under out_dir. Progress lines go to
/// `progress` when non-null.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      std::ostream* progress = nullptr);

std::string sweep_header();

}  // namespace pwleq

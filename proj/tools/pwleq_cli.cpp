// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver for the equalizer experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pwleq/activation.hpp"
#include "pwleq/channel.hpp"
#include "pwleq/experiment.hpp"
#include "pwleq/hwcost.hpp"
#include "pwleq/metrics.hpp"
#include "pwleq/model.hpp"
#include "pwleq/training.hpp"

namespace fs = std::filesystem;
using namespace pwleq;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string data_path;
  bool quiet = false;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_experiment_config(g.config_path);
  if (g.seed) c.set_seed(*g.seed);
  if (!g.out_dir.empty()) c.output_dir = g.out_dir;
  fs::create_directories(c.output_dir);
  return c;
}

Dataset training_data(const Globals& g, const ExperimentConfig& c) {
  return g.data_path.empty() ? build_dataset(c.channel) : read_dataset(g.data_path);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

EpochCallback progress(const Globals& g) {
  if (g.quiet) return {};
  return [](const EpochLog& e) { std::cerr << format_epoch(e) << "\n"; };
}

std::string mode_name(const ActivationSet& acts) {
  switch (acts.gate.mode()) {
    case ActivationFn::Mode::Exact: return "exact";
    case ActivationFn::Mode::Pwl: return "pwl";
    case ActivationFn::Mode::FixedPwl: return "pwl_fixed";
  }
  return "exact";
}

void report_run(const fs::path& out, const std::string& stem, const TrainResult& run) {
  write_file(out / ("log_" + stem + ".csv"), format_training_log(run.log));
  save_model(out / stem, run.params, run.acts);
  std::cout << stem << ": best epoch " << run.best_epoch << ", validation Q "
            << format_q(run.best_val_q_db) << " dB, model " << (out / stem).string() << ".ckpt\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PWL-activation biLSTM equalizer experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config file (key = value lines)");
  app.add_option("--out", g.out_dir, "Output directory (overrides output.dir)");
  app.add_option("--seed", g.seed, "Seed for channel and training (overrides config)");
  app.add_flag("--quiet", g.quiet, "Suppress per-epoch progress on stderr");

  auto* generate = app.add_subcommand("generate", "Write the synthetic channel dataset");

  std::string kind_name, fitter = "hard";
  int segments = 3;
  double half_range = 4.0;
  int grid_points = 401;
  auto* approx = app.add_subcommand("approx", "Fit a PWL activation and report its max error");
  approx->add_option("kind", kind_name, "sigmoid | tanh")->required();
  approx->add_option("fitter", fitter, "hard | chord | minimax");
  approx->add_option("segments", segments, "Segment count (3, 5, 7 or 9)");
  approx->add_option("half_range", half_range, "Breakpoint range [-T, T]");
  approx->add_option("--grid-points", grid_points, "Candidate grid size for minimax");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Train with exact activations");
  pretrain_cmd->add_option("--data", g.data_path, "Dataset file (default: generate from config)");

  std::string model_path;
  int k = 3;
  auto* retrain_cmd = app.add_subcommand("retrain", "Swap to PWL activations and continue training");
  retrain_cmd->add_option("--model", model_path, "Pre-trained model (.ckpt or stem)")->required();
  retrain_cmd->add_option("--segments", k, "Segment count")->check(CLI::IsMember({3, 5, 7, 9}));
  retrain_cmd->add_option("--data", g.data_path, "Dataset file");

  auto* scratch_cmd = app.add_subcommand("scratch", "Train with PWL activations from initialization");
  scratch_cmd->add_option("--segments", k, "Segment count")->check(CLI::IsMember({3, 5, 7, 9}));
  scratch_cmd->add_option("--data", g.data_path, "Dataset file");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on the held-out set");
  evaluate_cmd->add_option("--model", model_path, "Model (.ckpt or stem)")->required();

  auto* sweep = app.add_subcommand("sweep", "Pre-train, then swap and re-train per segment count");

  std::vector<int> cost_segments{3, 5, 7, 9};
  bool shift_add = false;
  auto* cost = app.add_subcommand("cost", "Operation counts next to the published FPGA resources");
  cost->add_option("--segments", cost_segments, "Segment counts")->delimiter(',');
  cost->add_flag("--shift-add", shift_add, "Count multiplies as shift-and-add");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "pwleq: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*generate) {
      const auto c = load_config(g);
      const auto data = build_dataset(c.channel);
      const auto path = c.output_dir / "dataset.csv";
      write_dataset(path, data);
      std::cout << "wrote " << data.tx.size() << " symbols to " << path.string() << ", measured SNR "
                << format_double(measured_snr_db(data)) << " dB\n";
    } else if (*approx) {
      const fs::path out = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
      fs::create_directories(out);
      const auto kind = parse_activation_kind(kind_name);
      if (fitter != "hard" && fitter != "chord" && fitter != "minimax") {
        throw CLI::ValidationError("fitter", "unknown fitter '" + fitter + "' (expected hard, chord or minimax)");
      }
      const auto spec = make_spec(kind, fitter, segments, half_range, grid_points);
      const auto path = out / (std::string(to_string(kind)) + "_" + fitter + "_k" +
                               std::to_string(spec.segments()) + ".pwl");
      write_file(path, to_record(spec) + "\n");
      std::cout << "max_abs_error=" << format_double(max_abs_error(spec)) << " spec=" << path.string()
                << "\n";
    } else if (*pretrain_cmd) {
      const auto c = load_config(g);
      const auto run = pretrain(training_data(g, c), c.pretrain, progress(g));
      report_run(c.output_dir, "pretrained", run);
    } else if (*retrain_cmd) {
      const auto c = load_config(g);
      const auto loaded = load_model(model_path);
      const auto specs = make_specs(c.pwl, k);
      const auto run = retrain(loaded.params, specs.sigmoid, specs.tanh, training_data(g, c), c.retrain,
                               progress(g));
      report_run(c.output_dir, "retrained_k" + std::to_string(k), run);
    } else if (*scratch_cmd) {
      const auto c = load_config(g);
      const auto specs = make_specs(c.pwl, k);
      const auto run = train_scratch(specs.sigmoid, specs.tanh, training_data(g, c), c.scratch, progress(g));
      report_run(c.output_dir, "scratch_k" + std::to_string(k), run);
    } else if (*evaluate_cmd) {
      const auto c = load_config(g);
      const auto loaded = load_model(model_path);
      const auto test = make_test_dataset(c.channel, c.test_windows);
      const auto windows = window_stream(test.rx, test.tx);
      const auto r = evaluate(loaded.params, loaded.acts, windows, c.channel.qam_order);
      const int segs = loaded.acts.gate.is_pwl() ? loaded.acts.gate.spec().segments() : 0;
      const std::string text = sweep_header() + "\n" +
                               result_record("evaluate", segs, mode_name(loaded.acts), r) + "\n";
      write_file(c.output_dir / "evaluate.csv", text);
      std::cout << text;
    } else if (*sweep) {
      const auto c = load_config(g);
      write_file(c.output_dir / "config.txt", format_experiment_config(c));
      run_sweep(c, c.output_dir, g.quiet ? nullptr : &std::cerr);
      std::cout << "wrote " << (c.output_dir / "sweep.csv").string() << "\n";
    } else if (*cost) {
      const auto text = cost_report(cost_segments, shift_add);
      if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        write_file(fs::path(g.out_dir) / "cost.csv", text);
      }
      std::cout << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "pwleq: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pwleq {

namespace {

constexpr std::uint64_t kTestSeedOffset = 0x7e57;

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  if constexpr (std::is_floating_point_v<T>) {
    if (value == "inf" || value == "+inf") return std::numeric_limits<T>::infinity();
  }
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream in(value);
  for (std::string item; std::getline(in, item, ',');) {
    out.push_back(parse_number<int>(key, trim(item)));
  }
  return out;
}

bool set_train_key(TrainConfig& tc, const std::string& key, const std::string& value) {
  if (key == "epochs") tc.epochs = parse_number<int>(key, value);
  else if (key == "batch_size") tc.batch_size = parse_number<int>(key, value);
  else if (key == "lr") tc.lr = parse_number<double>(key, value);
  else if (key == "seed") tc.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "patience") tc.patience = parse_number<int>(key, value);
  else if (key == "split") tc.split = parse_number<double>(key, value);
  else if (key == "tail_guard") tc.tail_guard = parse_number<double>(key, value);
  else if (key == "hidden") tc.hidden = parse_number<int>(key, value);
  else return false;
  return true;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

void append_train(std::ostringstream& out, const std::string& prefix, const TrainConfig& tc) {
  out << prefix << "epochs = " << tc.epochs << "\n"
      << prefix << "batch_size = " << tc.batch_size << "\n"
      << prefix << "lr = " << fmt(tc.lr) << "\n"
      << prefix << "seed = " << tc.seed << "\n"
      << prefix << "patience = " << tc.patience << "\n"
      << prefix << "split = " << fmt(tc.split) << "\n"
      << prefix << "tail_guard = " << fmt(tc.tail_guard) << "\n"
      << prefix << "hidden = " << tc.hidden << "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string pwl_mode(const ExperimentConfig& config) {
  return config.fixed_point ? "pwl_fixed" : "pwl";
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  retrain.epochs = 30;
  scratch.epochs = 120;
}

void ExperimentConfig::validate() const {
  channel.validate();
  pretrain.validate();
  retrain.validate();
  scratch.validate();
  if (pwl.segments.empty()) throw std::invalid_argument("config: pwl.segments is empty");
  for (int k : pwl.segments) {
    if (k != 3 && k != 5 && k != 7 && k != 9) {
      throw std::invalid_argument("config: pwl.segments must be drawn from {3,5,7,9}");
    }
  }
  if (pwl.fitter != "hard" && pwl.fitter != "chord" && pwl.fitter != "minimax" && pwl.fitter != "auto") {
    throw std::invalid_argument("config: unknown pwl.fitter '" + pwl.fitter + "'");
  }
  if (fixed_point) fixed_point->validate();
  if (test_windows < 1) throw std::invalid_argument("config: eval.test_windows must be >= 1");
}

void ExperimentConfig::set_seed(std::uint64_t seed) {
  channel.seed = seed;
  pretrain.seed = seed;
  retrain.seed = seed;
  scratch.seed = seed;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig c;
  FixedFormat fixed = kDefaultFixedFormat;
  bool fixed_set = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string line(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);

    bool known = true;
    if (section == "channel") {
      auto& ch = c.channel;
      if (name == "qam_order") ch.qam_order = parse_number<int>(key, value);
      else if (name == "n_symbols") ch.n_symbols = parse_number<std::size_t>(key, value);
      else if (name == "dispersion_taps") ch.dispersion_taps = parse_number<int>(key, value);
      else if (name == "dispersion_strength") ch.dispersion_strength = parse_number<double>(key, value);
      else if (name == "kerr_gamma") ch.kerr_gamma = parse_number<double>(key, value);
      else if (name == "snr_db") ch.snr_db = parse_number<double>(key, value);
      else if (name == "seed") ch.seed = parse_number<std::uint64_t>(key, value);
      else known = false;
    } else if (section == "train") {
      // Applies to all three regimes; epochs only to pre-training.
      if (name == "epochs") {
        c.pretrain.epochs = parse_number<int>(key, value);
      } else if (name == "retrain_epochs") {
        c.retrain.epochs = parse_number<int>(key, value);
      } else if (name == "scratch_epochs") {
        c.scratch.epochs = parse_number<int>(key, value);
      } else {
        known = set_train_key(c.pretrain, name, value);
        if (known) {
          set_train_key(c.retrain, name, value);
          set_train_key(c.scratch, name, value);
        }
      }
    } else if (section == "pretrain" || section == "retrain" || section == "scratch") {
      auto& tc = section == "pretrain" ? c.pretrain : section == "retrain" ? c.retrain : c.scratch;
      known = set_train_key(tc, name, value);
    } else if (section == "pwl") {
      if (name == "fitter") c.pwl.fitter = value;
      else if (name == "segments") c.pwl.segments = parse_int_list(key, value);
      else if (name == "half_range") c.pwl.half_range = parse_number<double>(key, value);
      else if (name == "grid_points") c.pwl.grid_points = parse_number<int>(key, value);
      else known = false;
    } else if (section == "fixed_point") {
      fixed_set = true;
      if (name == "total_bits") fixed.total_bits = parse_number<int>(key, value);
      else if (name == "frac_bits") fixed.frac_bits = parse_number<int>(key, value);
      else known = false;
    } else if (section == "eval") {
      if (name == "test_windows") c.test_windows = parse_number<std::size_t>(key, value);
      else known = false;
    } else if (section == "output") {
      if (name == "dir") c.output_dir = value;
      else known = false;
    } else {
      known = false;
    }
    if (!known) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (fixed_set) c.fixed_point = fixed;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_config(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& ch = c.channel;
  out << "channel.qam_order = " << ch.qam_order << "\n"
      << "channel.n_symbols = " << ch.n_symbols << "\n"
      << "channel.dispersion_taps = " << ch.dispersion_taps << "\n"
      << "channel.dispersion_strength = " << fmt(ch.dispersion_strength) << "\n"
      << "channel.kerr_gamma = " << fmt(ch.kerr_gamma) << "\n"
      << "channel.snr_db = " << fmt(ch.snr_db) << "\n"
      << "channel.seed = " << ch.seed << "\n";
  append_train(out, "pretrain.", c.pretrain);
  append_train(out, "retrain.", c.retrain);
  append_train(out, "scratch.", c.scratch);
  out << "pwl.fitter = " << c.pwl.fitter << "\n"
      << "pwl.segments = ";
  for (std::size_t i = 0; i < c.pwl.segments.size(); ++i) out << (i ? "," : "") << c.pwl.segments[i];
  out << "\n"
      << "pwl.half_range = " << fmt(c.pwl.half_range) << "\n"
      << "pwl.grid_points = " << c.pwl.grid_points << "\n";
  if (c.fixed_point) {
    out << "fixed_point.total_bits = " << c.fixed_point->total_bits << "\n"
        << "fixed_point.frac_bits = " << c.fixed_point->frac_bits << "\n";
  }
  out << "eval.test_windows = " << c.test_windows << "\n"
      << "output.dir = " << c.output_dir.string() << "\n";
  return out.str();
}

PwlSpec make_spec(ActivationKind kind, const std::string& fitter, int segments, double half_range,
                  int grid_points) {
  const double range = kind == ActivationKind::Sigmoid ? 2.0 * half_range : half_range;
  if (fitter == "hard" || (fitter == "auto" && segments == 3)) {
    if (segments != 3) throw std::invalid_argument("the hard fitter only produces 3 segments");
    return fit_hard(kind);
  }
  if (fitter == "chord") return fit_chord(kind, segments, range);
  if (fitter == "minimax" || fitter == "auto") return fit_minimax(kind, segments, range, grid_points);
  throw std::invalid_argument("unknown fitter '" + fitter + "' (expected hard, chord, minimax or auto)");
}

PwlPair make_specs(const PwlSettings& s, int segments) {
  return {make_spec(ActivationKind::Sigmoid, s.fitter, segments, s.half_range, s.grid_points),
          make_spec(ActivationKind::Tanh, s.fitter, segments, s.half_range, s.grid_points)};
}

Dataset make_test_dataset(const ChannelConfig& channel, std::size_t test_windows) {
  ChannelConfig c = channel;
  c.seed = channel.seed + kTestSeedOffset;
  c.n_symbols = kWindowLength + kOutputLength * (test_windows - 1);
  return build_dataset(c);
}

ActivationSet inference_activations(const ExperimentConfig& config, const PwlPair& specs) {
  if (config.fixed_point) {
    return swap_activations_fixed(ActivationSet::exact(), specs.sigmoid, specs.tanh,
                                  *config.fixed_point, *config.fixed_point);
  }
  return swap_activations(ActivationSet::exact(), specs.sigmoid, specs.tanh);
}

std::string sweep_header() { return "label,segments,mode,ber,q_db,n_bits"; }

SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      std::ostream* progress) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / "sweep.csv";
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open '" + csv_path.string() + "' for writing");
  csv << sweep_header() << "\n" << std::flush;

  SweepResult result;
  const auto emit = [&](SweepRow row) {
    csv << result_record(row.label, row.segments, row.mode, row.result) << "\n" << std::flush;
    if (progress) {
      *progress << "  " << row.label << " K=" << row.segments << " Q=" << format_q(row.result.q_db)
                << " dB (BER " << format_double(row.result.ber) << ")\n"
                << std::flush;
    }
    result.rows.push_back(std::move(row));
  };
  const auto log_epoch = [progress](const char* tag) {
    return [progress, tag](const EpochLog& e) {
      if (progress) *progress << "  [" << tag << "] " << format_epoch(e) << "\n" << std::flush;
    };
  };

  const Dataset train_data = build_dataset(config.channel);
  const Dataset test_data = make_test_dataset(config.channel, config.test_windows);
  const auto test_windows = window_stream(test_data.rx, test_data.tx);
  const int order = config.channel.qam_order;

  result.unequalized = evaluate_unequalized(test_windows, order);
  if (progress) *progress << "unequalized Q = " << format_q(result.unequalized.q_db) << " dB\n";

  result.pretrained = pretrain(train_data, config.pretrain, log_epoch("pretrain"));
  write_text(out_dir / "log_pretrain.csv", format_training_log(result.pretrained.log));
  save_model(out_dir / "pretrained", result.pretrained.params, ActivationSet::exact());
  result.exact = evaluate(result.pretrained.params, ActivationSet::exact(), test_windows, order);
  emit({"exact", 0, "exact", result.exact});

  for (int k : config.pwl.segments) {
    const auto specs = make_specs(config.pwl, k);
    const auto scoring = inference_activations(config, specs);
    const auto swapped = evaluate(result.pretrained.params, scoring, test_windows, order);
    result.no_retrain[k] = swapped;
    emit({"pwl_no_retrain", k, pwl_mode(config), swapped});

    TrainConfig tc = config.retrain;
    tc.seed = config.retrain.seed + static_cast<std::uint64_t>(k);
    const std::string tag = "retrain K=" + std::to_string(k);
    auto run = retrain(result.pretrained.params, specs.sigmoid, specs.tanh, train_data, tc,
                       log_epoch(tag.c_str()));
    write_text(out_dir / ("log_retrain_k" + std::to_string(k) + ".csv"), format_training_log(run.log));
    save_model(out_dir / ("retrained_k" + std::to_string(k)), run.params, run.acts);
    const auto retrained = evaluate(run.params, scoring, test_windows, order);
    result.retrained[k] = retrained;
    emit({"pwl_retrain", k, pwl_mode(config), retrained});
    result.retrain_runs[k] = std::move(run);
  }
  return result;
}

}  // namespace pwleq

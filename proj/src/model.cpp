// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pwleq/rng.hpp"

namespace pwleq {

namespace {

void require_roles(const PwlSpec& sigmoid_spec, const PwlSpec& tanh_spec) {
  if (sigmoid_spec.kind != ActivationKind::Sigmoid || tanh_spec.kind != ActivationKind::Tanh) {
    throw std::invalid_argument(
        "swap_activations: expected a sigmoid spec for the gate role and a tanh spec for the "
        "state role");
  }
}

void glorot(Matrix<double>& m, double fan_in, double fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
}

NamedTensor matrix_tensor(std::string name, const Matrix<double>& m, bool as_vector) {
  NamedTensor t{std::move(name), {}, {}};
  if (as_vector) {
    t.dims = {static_cast<std::size_t>(m.rows())};
  } else {
    t.dims = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data.push_back(m(i, j));
  return t;
}

void fill_matrix(Matrix<double>& m, const NamedTensor& t) {
  std::size_t expected = static_cast<std::size_t>(m.size());
  if (t.data.size() != expected) {
    throw DimensionError("checkpoint tensor '" + t.name + "' has " + std::to_string(t.data.size()) +
                         " values, expected " + std::to_string(expected));
  }
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t.data[k++];
}

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
  if (stem.extension() == ".ckpt" || stem.extension() == ".meta") stem.replace_extension();
  stem += suffix;
  return stem;
}

std::string format_spec(FixedFormat f) {
  return std::to_string(f.total_bits) + "," + std::to_string(f.frac_bits);
}

FixedFormat parse_format(const std::string& text) {
  FixedFormat f;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> f.total_bits >> comma >> f.frac_bits) || comma != ',') {
    throw std::invalid_argument("bad fixed-point format '" + text + "'");
  }
  f.validate();
  return f;
}

}  // namespace

ActivationSet swap_activations(const ActivationSet& acts_exact, const PwlSpec& sigmoid_spec,
                               const PwlSpec& tanh_spec) {
  require_roles(sigmoid_spec, tanh_spec);
  ActivationSet out = acts_exact;
  out.gate = ActivationFn::pwl(sigmoid_spec);
  out.state = ActivationFn::pwl(tanh_spec);
  return out;
}

ActivationSet swap_activations_fixed(const ActivationSet& acts_exact, const PwlSpec& sigmoid_spec,
                                     const PwlSpec& tanh_spec, FixedFormat io_format,
                                     FixedFormat coeff_format) {
  require_roles(sigmoid_spec, tanh_spec);
  ActivationSet out = acts_exact;
  out.gate = ActivationFn::pwl_fixed(sigmoid_spec, io_format, coeff_format);
  out.state = ActivationFn::pwl_fixed(tanh_spec, io_format, coeff_format);
  return out;
}

EqualizerParams init_params(std::uint64_t seed, Eigen::Index hidden) {
  auto p = EqualizerParams::zeros(hidden);
  const double h = static_cast<double>(hidden);
  std::uint64_t stream = 0;
  for (auto* lstm : {&p.forward, &p.backward}) {
    CounterRng rw(seed, ++stream), ru(seed, ++stream);
    glorot(lstm->W, kInputFeatures, 4 * h, rw);
    glorot(lstm->U, h, 4 * h, ru);
    lstm->b.middleRows(hidden, hidden).setOnes();
  }
  CounterRng rk(seed, ++stream);
  for (auto& tap : p.conv.taps) {
    glorot(tap, 2 * h * kKernelLength, kOutputChannels * kKernelLength, rk);
  }
  return p;
}

Matrix<double> BatchForward::output(Eigen::Index b) const {
  Matrix<double> out(kOutputLength, kOutputChannels);
  for (Eigen::Index t = 0; t < kOutputLength; ++t) out.row(t) = outputs.col(t * batch + b).transpose();
  return out;
}

double BatchForward::flat_fraction() const {
  const long n = act_count();
  return n == 0 ? 0.0 : static_cast<double>(flat_count()) / static_cast<double>(n);
}

BatchForward forward_batch(const EqualizerParams& params, std::span<const Matrix<double>> windows,
                           const ActivationSet& acts) {
  params.check();
  const auto B = static_cast<Eigen::Index>(windows.size());
  detail::require(B > 0, "forward_batch: empty batch");
  BatchForward fw;
  fw.batch = B;
  fw.inputs.resize(kInputFeatures, kWindowLength * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& w = windows[b];
    detail::require(w.rows() == kWindowLength && w.cols() == kInputFeatures,
                    "equalizer: window must be 81 x 2, got " + std::to_string(w.rows()) + " x " +
                        std::to_string(w.cols()));
    for (Eigen::Index t = 0; t < kWindowLength; ++t) fw.inputs.col(t * B + b) = w.row(t).transpose();
  }
  fw.fwd = lstm_sequence_forward(params.forward, fw.inputs, kWindowLength, B, false, acts.gate,
                                 acts.state);
  fw.bwd = lstm_sequence_forward(params.backward, fw.inputs, kWindowLength, B, true, acts.gate,
                                 acts.state);
  const auto H = params.hidden();
  fw.features.resize(2 * H, kWindowLength * B);
  fw.features.topRows(H) = fw.fwd.hidden;
  fw.features.bottomRows(H) = fw.bwd.hidden;
  fw.outputs = conv1d_forward_batched(fw.features, B, params.conv);
  return fw;
}

EqualizerParams backward_batch(const EqualizerParams& params, const BatchForward& fw,
                               const Matrix<double>& doutputs, const ActivationSet& acts) {
  detail::require(doutputs.rows() == fw.outputs.rows() && doutputs.cols() == fw.outputs.cols(),
                  "backward_batch: gradient shape mismatch");
  const auto H = params.hidden();
  auto grads = EqualizerParams::zeros(H);
  const Matrix<double> dfeatures =
      conv1d_backward_batched(doutputs, fw.features, fw.batch, params.conv, grads.conv);
  lstm_sequence_backward<double>(params.forward, fw.fwd, dfeatures.topRows(H), acts.gate,
                                 acts.state, grads.forward);
  lstm_sequence_backward<double>(params.backward, fw.bwd, dfeatures.bottomRows(H), acts.gate,
                                 acts.state, grads.backward);
  return grads;
}

Matrix<double> equalizer_forward(const EqualizerParams& params, const Matrix<double>& window,
                                 const ActivationSet& acts) {
  return forward_batch(params, std::span<const Matrix<double>>(&window, 1), acts).output(0);
}

EqualizerParams equalizer_backward(const EqualizerParams& params, const Matrix<double>& window,
                                   const ActivationSet& acts, const Matrix<double>& grad_out) {
  detail::require(grad_out.rows() == kOutputLength && grad_out.cols() == kOutputChannels,
                  "equalizer_backward: grad_out must be 61 x 2");
  const auto fw = forward_batch(params, std::span<const Matrix<double>>(&window, 1), acts);
  return backward_batch(params, fw, grad_out.transpose(), acts);
}

std::size_t window_count(std::size_t n_symbols) {
  if (n_symbols < static_cast<std::size_t>(kWindowLength)) return 0;
  return (n_symbols - kWindowLength) / kOutputLength + 1;
}

std::vector<WindowPair> window_stream(std::span<const std::complex<double>> symbols_rx,
                                      std::span<const std::complex<double>> symbols_tx) {
  if (symbols_rx.size() != symbols_tx.size()) {
    throw std::invalid_argument("window_stream: rx and tx lengths differ");
  }
  if (symbols_rx.size() < static_cast<std::size_t>(kWindowLength)) {
    throw std::invalid_argument("window_stream: need at least 81 symbols, got " +
                                std::to_string(symbols_rx.size()));
  }
  const std::size_t n = window_count(symbols_rx.size());
  std::vector<WindowPair> out(n);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t start = w * kOutputLength;
    auto& pair = out[w];
    pair.window.resize(kWindowLength, kInputFeatures);
    pair.target.resize(kOutputLength, kOutputChannels);
    for (int t = 0; t < kWindowLength; ++t) {
      pair.window(t, 0) = symbols_rx[start + t].real();
      pair.window(t, 1) = symbols_rx[start + t].imag();
    }
    for (int t = 0; t < kOutputLength; ++t) {
      pair.target(t, 0) = symbols_tx[start + kContext + t].real();
      pair.target(t, 1) = symbols_tx[start + kContext + t].imag();
    }
  }
  return out;
}

std::vector<NamedTensor> to_named_tensors(const EqualizerParams& params) {
  params.check();
  std::vector<NamedTensor> out;
  for (const auto& [prefix, lstm] :
       {std::pair<std::string, const LstmWeights<double>*>{"lstm_fwd", &params.forward},
        {"lstm_bwd", &params.backward}}) {
    out.push_back(matrix_tensor(prefix + ".W", lstm->W, false));
    out.push_back(matrix_tensor(prefix + ".U", lstm->U, false));
    out.push_back(matrix_tensor(prefix + ".b", lstm->b, true));
  }
  const auto& conv = params.conv;
  NamedTensor kernels{"conv.kernels",
                      {static_cast<std::size_t>(conv.out_channels()),
                       static_cast<std::size_t>(conv.in_channels()),
                       static_cast<std::size_t>(conv.length())},
                      {}};
  for (Eigen::Index co = 0; co < conv.out_channels(); ++co)
    for (Eigen::Index ci = 0; ci < conv.in_channels(); ++ci)
      for (Eigen::Index k = 0; k < conv.length(); ++k) kernels.data.push_back(conv(co, ci, k));
  out.push_back(std::move(kernels));
  out.push_back(matrix_tensor("conv.bias", conv.bias, true));
  return out;
}

EqualizerParams from_named_tensors(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  const auto get = [&](const std::string& name) -> const NamedTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    return *it->second;
  };
  const auto& u = get("lstm_fwd.U");
  if (u.dims.size() != 2) throw DimensionError("checkpoint: lstm_fwd.U must be rank 2");
  const auto hidden = static_cast<Eigen::Index>(u.dims[1]);
  auto p = EqualizerParams::zeros(hidden);
  for (const auto& [prefix, lstm] : {std::pair<std::string, LstmWeights<double>*>{"lstm_fwd", &p.forward},
                                     {"lstm_bwd", &p.backward}}) {
    fill_matrix(lstm->W, get(prefix + ".W"));
    fill_matrix(lstm->U, get(prefix + ".U"));
    fill_matrix(lstm->b, get(prefix + ".b"));
  }
  const auto& k = get("conv.kernels");
  if (k.dims != std::vector<std::size_t>{kOutputChannels, static_cast<std::size_t>(2 * hidden),
                                          kKernelLength}) {
    throw DimensionError("checkpoint: conv.kernels has unexpected dims");
  }
  std::size_t idx = 0;
  for (Eigen::Index co = 0; co < kOutputChannels; ++co)
    for (Eigen::Index ci = 0; ci < 2 * hidden; ++ci)
      for (Eigen::Index kk = 0; kk < kKernelLength; ++kk) p.conv(co, ci, kk) = k.data[idx++];
  fill_matrix(p.conv.bias, get("conv.bias"));
  return p;
}

void save_model(const std::filesystem::path& stem, const EqualizerParams& params,
                const ActivationSet& acts) {
  write_checkpoint(with_suffix(stem, ".ckpt"), to_named_tensors(params));
  const auto meta_path = with_suffix(stem, ".meta");
  std::ofstream meta(meta_path, std::ios::trunc);
  if (!meta) throw std::runtime_error("cannot open '" + meta_path.string() + "' for writing");
  meta << "hidden = " << params.hidden() << "\n"
       << "input = " << kInputFeatures << "\n"
       << "kernel = " << kKernelLength << "\n";
  switch (acts.gate.mode()) {
    case ActivationFn::Mode::Exact:
      meta << "mode = exact\n";
      break;
    case ActivationFn::Mode::Pwl:
      meta << "mode = pwl\n";
      break;
    case ActivationFn::Mode::FixedPwl:
      meta << "mode = pwl_fixed\n"
           << "fixed_io = " << format_spec(*acts.gate.io_format()) << "\n"
           << "fixed_coeff = " << format_spec(*acts.gate.coeff_format()) << "\n";
      break;
  }
  if (acts.gate.is_pwl()) {
    meta << "sigmoid_spec = " << to_record(acts.gate.spec()) << "\n"
         << "tanh_spec = " << to_record(acts.state.spec()) << "\n";
  }
  if (!meta) throw std::runtime_error("write failed for '" + meta_path.string() + "'");
}

LoadedModel load_model(const std::filesystem::path& path) {
  LoadedModel out{from_named_tensors(read_checkpoint(with_suffix(path, ".ckpt"))),
                  ActivationSet::exact()};
  const auto meta_path = with_suffix(path, ".meta");
  std::ifstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot open '" + meta_path.string() + "'");
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (kv.count("hidden") && std::stol(kv["hidden"]) != out.params.hidden()) {
    throw std::runtime_error(meta_path.string() + ": hidden size disagrees with checkpoint");
  }
  const std::string mode = kv.count("mode") ? kv["mode"] : "exact";
  if (mode == "pwl") {
    out.acts = swap_activations(out.acts, parse_record(kv.at("sigmoid_spec")),
                                parse_record(kv.at("tanh_spec")));
  } else if (mode == "pwl_fixed") {
    out.acts = swap_activations_fixed(out.acts, parse_record(kv.at("sigmoid_spec")),
                                      parse_record(kv.at("tanh_spec")),
                                      parse_format(kv.at("fixed_io")),
                                      parse_format(kv.at("fixed_coeff")));
  } else if (mode != "exact") {
    throw std::runtime_error(meta_path.string() + ": unknown activation mode '" + mode + "'");
  }
  return out;
}

}  // namespace pwleq

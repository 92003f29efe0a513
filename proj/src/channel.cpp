// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/channel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pwleq/activation.hpp"
#include "pwleq/rng.hpp"

namespace pwleq {

namespace {

constexpr std::uint64_t kQamStream = 0x51414d;    // "QAM"
constexpr std::uint64_t kNoiseStream = 0x4e4f4953;  // "NOIS"

int isqrt_exact(int order) {
  const int l = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  return l * l == order ? l : -1;
}

std::string config_header(const ChannelConfig& c) {
  std::ostringstream out;
  out << "# pwleq dataset qam_order=" << c.qam_order << " n_symbols=" << c.n_symbols
      << " dispersion_taps=" << c.dispersion_taps
      << " dispersion_strength=" << format_double(c.dispersion_strength)
      << " kerr_gamma=" << format_double(c.kerr_gamma) << " snr_db="
      << (std::isinf(c.snr_db) ? std::string("inf") : format_double(c.snr_db)) << " seed=" << c.seed;
  return out.str();
}

double parse_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return kNoNoise;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void ChannelConfig::validate() const {
  if (qam_order < 4 || isqrt_exact(qam_order) < 0 || (qam_order & (qam_order - 1)) != 0) {
    throw std::invalid_argument("qam_order must be a square power of two >= 4, got " +
                                std::to_string(qam_order));
  }
  if (dispersion_taps < 1 || dispersion_taps % 2 == 0) {
    throw std::invalid_argument("dispersion_taps must be odd and >= 1");
  }
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("snr_db must be finite (or +inf for no noise)");
  }
  if (!std::isfinite(dispersion_strength) || !std::isfinite(kerr_gamma)) {
    throw std::invalid_argument("channel impairment parameters must be finite");
  }
}

int bits_per_symbol(int order) {
  const int levels = isqrt_exact(order);
  if (order < 4 || levels < 0 || (order & (order - 1)) != 0) {
    throw std::invalid_argument("invalid QAM order " + std::to_string(order));
  }
  return static_cast<int>(std::lround(std::log2(static_cast<double>(order))));
}

ComplexSeq qam_constellation(int order) {
  const int k = bits_per_symbol(order) / 2;
  const int levels = 1 << k;
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  // Position j on an axis carries the Gray code j ^ (j >> 1).
  std::vector<int> position_of_code(levels);
  for (int j = 0; j < levels; ++j) position_of_code[j ^ (j >> 1)] = j;
  ComplexSeq points(order);
  for (int i = 0; i < order; ++i) {
    const int re = 2 * position_of_code[i >> k] - (levels - 1);
    const int im = 2 * position_of_code[i & (levels - 1)] - (levels - 1);
    points[i] = {re * scale, im * scale};
  }
  return points;
}

ComplexSeq gen_qam(std::size_t n, int order, std::uint64_t seed) {
  const auto points = qam_constellation(order);
  CounterRng rng(seed, kQamStream);
  ComplexSeq out(n);
  for (auto& s : out) s = points[rng.below(static_cast<std::uint64_t>(order))];
  return out;
}

ComplexSeq dispersion_taps(int taps, double strength) {
  if (taps < 1 || taps % 2 == 0) throw std::invalid_argument("dispersion taps must be odd");
  // Sample H(f) = exp(i*strength*(2*pi*f)^2) at f = k/N folded into [-1/2, 1/2),
  // inverse DFT, then centre the impulse response.
  const int n = taps;
  std::vector<std::complex<double>> response(n);
  for (int k = 0; k < n; ++k) {
    const double f = static_cast<double>(k <= n / 2 ? k : k - n) / n;
    const double w = 2.0 * std::numbers::pi * f;
    response[k] = std::polar(1.0, strength * w * w);
  }
  const int half = (n - 1) / 2;
  ComplexSeq h(n);
  for (int m = -half; m <= half; ++m) {
    const int idx = ((m % n) + n) % n;
    std::complex<double> acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += response[k] * std::polar(1.0, 2.0 * std::numbers::pi * k * idx / n);
    }
    h[m + half] = acc / static_cast<double>(n);
  }
  double energy = 0.0;
  for (const auto& v : h) energy += std::norm(v);
  const double norm = 1.0 / std::sqrt(energy);
  for (auto& v : h) v *= norm;
  return h;
}

ComplexSeq dispersive_filter(std::span<const std::complex<double>> x, int taps, double strength) {
  const auto h = dispersion_taps(taps, strength);
  const int half = (taps - 1) / 2;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  ComplexSeq y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::complex<double> acc = 0.0;
    for (int m = -half; m <= half; ++m) {
      const std::ptrdiff_t src = i - m;
      if (src >= 0 && src < n) acc += h[m + half] * x[src];
    }
    y[i] = acc;
  }
  return y;
}

ComplexSeq kerr_rotate(std::span<const std::complex<double>> x, double gamma) {
  ComplexSeq y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * std::polar(1.0, gamma * std::norm(x[i]));
  return y;
}

ComplexSeq add_awgn(std::span<const std::complex<double>> x, double snr_db, std::uint64_t seed) {
  ComplexSeq y(x.begin(), x.end());
  if (std::isinf(snr_db) && snr_db > 0) return y;
  const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
  CounterRng rng(seed, kNoiseStream);
  for (auto& v : y) {
    const double re = rng.normal();
    const double im = rng.normal();
    v += std::complex<double>(sigma * re, sigma * im);
  }
  return y;
}

Dataset build_dataset(const ChannelConfig& config) {
  config.validate();
  Dataset d;
  d.config = config;
  d.tx = gen_qam(config.n_symbols, config.qam_order, config.seed);
  const bool identity_filter = config.dispersion_strength == 0.0;
  const auto dispersed =
      identity_filter ? d.tx : dispersive_filter(d.tx, config.dispersion_taps, config.dispersion_strength);
  const auto rotated = config.kerr_gamma == 0.0 ? dispersed : kerr_rotate(dispersed, config.kerr_gamma);
  d.rx = add_awgn(rotated, config.snr_db, config.seed);
  return d;
}

std::string format_dataset(const Dataset& data) {
  std::string out = config_header(data.config);
  out += "\n# tx_re,tx_im,rx_re,rx_im\n";
  for (std::size_t i = 0; i < data.tx.size(); ++i) {
    out += format_double(data.tx[i].real());
    out += ',';
    out += format_double(data.tx[i].imag());
    out += ',';
    out += format_double(data.rx[i].real());
    out += ',';
    out += format_double(data.rx[i].imag());
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const auto text = format_dataset(data);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  Dataset d;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream words(line.substr(1));
      for (std::string w; words >> w;) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) continue;
        const auto key = w.substr(0, eq);
        const auto val = w.substr(eq + 1);
        auto& c = d.config;
        if (key == "qam_order") c.qam_order = std::stoi(val);
        else if (key == "n_symbols") c.n_symbols = std::stoull(val);
        else if (key == "dispersion_taps") c.dispersion_taps = std::stoi(val);
        else if (key == "dispersion_strength") c.dispersion_strength = parse_double(val);
        else if (key == "kerr_gamma") c.kerr_gamma = parse_double(val);
        else if (key == "snr_db") c.snr_db = parse_double(val);
        else if (key == "seed") c.seed = std::stoull(val);
      }
      continue;
    }
    double v[4];
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
      const auto comma = line.find(',', pos);
      if ((k < 3) == (comma == std::string::npos)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": expected 4 comma-separated values");
      }
      v[k] = parse_double(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      pos = comma + 1;
    }
    d.tx.emplace_back(v[0], v[1]);
    d.rx.emplace_back(v[2], v[3]);
  }
  d.config.n_symbols = d.tx.size();
  return d;
}

double measured_snr_db(const Dataset& data) {
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < data.tx.size(); ++i) {
    sig += std::norm(data.tx[i]);
    err += std::norm(data.rx[i] - data.tx[i]);
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

}  // namespace pwleq

// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pwleq {

using ComplexSeq = std::vector<std::complex<double>>;

/// Synthetic link: QAM -> quadratic-phase dispersive FIR -> Kerr-like phase
/// rotation -> AWGN. snr_db = +inf disables the noise stage.
struct ChannelConfig {
  int qam_order = 16;
  std::size_t n_symbols = 281108;  // 4608 windows
  int dispersion_taps = 11;
  double dispersion_strength = 0.8;
  double kerr_gamma = 0.10;
  double snr_db = 18.0;
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct Dataset {
  ComplexSeq tx;
  ComplexSeq rx;
  ChannelConfig config;
};

/// Bits per symbol for a square QAM order (log2(order)).
int bits_per_symbol(int order);

/// Unit-average-power Gray-mapped constellation; point index i carries bits
/// i (MSB first), the high half selecting the in-phase level.
ComplexSeq qam_constellation(int order);

/// i.i.d. uniform symbols from qam_constellation(order).
ComplexSeq gen_qam(std::size_t n, int order, std::uint64_t seed);

/// FIR taps h[-(taps-1)/2 .. (taps-1)/2] of the unit-energy quadratic-phase filter.
ComplexSeq dispersion_taps(int taps, double strength);

ComplexSeq dispersive_filter(std::span<const std::complex<double>> x, int taps, double strength);
ComplexSeq kerr_rotate(std::span<const std::complex<double>> x, double gamma);
ComplexSeq add_awgn(std::span<const std::complex<double>> x, double snr_db, std::uint64_t seed);

Dataset build_dataset(const ChannelConfig& config);

/// Text format: `#`-prefixed header with the config, then `tx_re,tx_im,rx_re,rx_im`
/// per symbol.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);
std::string format_dataset(const Dataset& data);

/// 10*log10(mean|tx|^2 / mean|rx - tx|^2).
double measured_snr_db(const Dataset& data);

}  // namespace pwleq

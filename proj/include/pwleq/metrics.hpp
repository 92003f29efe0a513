// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwleq/channel.hpp"
#include "pwleq/model.hpp"

namespace pwleq {

/// Q in dB; +inf encodes the infinite-Q sentinel (BER 0) and -inf the
/// zero-information sentinel (BER >= 0.5).
struct QResult {
  double ber = 0.0;
  double q_db = 0.0;
  std::uint64_t n_bits = 0;
  std::uint64_t bit_errors = 0;
};

inline constexpr const char* kInfiniteQ = "INF_Q";
inline constexpr const char* kZeroQ = "ZERO_Q";

/// Nearest-point decisions, Gray-demapped with gen_qam's bit labelling.
std::vector<std::uint8_t> hard_decision(std::span<const std::complex<double>> y, int order);

/// Bit errors between the hard decisions of two (real, imag) row matrices.
std::uint64_t bit_errors_between(const Matrix<double>& decided, const Matrix<double>& reference,
                                 int order);

/// Inverse of erfc on (0, 2): bisection then Newton polish.
double erfcinv(double p);

/// 20*log10(sqrt(2) * erfcinv(2 * ber)), with sentinels at ber 0 and ber >= 0.5.
double q_factor_db(double ber);

/// Decimal Q or one of the sentinel strings.
std::string format_q(double q_db);
double parse_q(const std::string& text);

QResult q_result(std::uint64_t bit_errors, std::uint64_t n_bits);

/// Equalizes every window, hard-decides the 61 recovered symbols and compares
/// with the transmitted ones.
QResult evaluate(const EqualizerParams& params, const ActivationSet& acts,
                 std::span<const WindowPair> windows, int order);

/// Same symbols decided directly from the received samples.
QResult evaluate_unequalized(std::span<const WindowPair> windows, int order);

/// `label,segments,mode,ber,q_db,n_bits`
std::string result_record(const std::string& label, int segments, const std::string& mode,
                          const QResult& r);

/// Reference values read off the published figure and table.
struct PublishedReference {
  struct SegmentPoint {
    int segments;
    double q_no_retrain;
    double q_retrain;
  };
  struct ResourceRow {
    const char* variant;
    int segments;  // 0 for the original tanh
    int dsp, lut, ff;
  };

  static constexpr double kBaselineQ = 5.2;
  static constexpr std::array<SegmentPoint, 4> kSegmentSweep{{
      {3, 0.0, 5.09}, {5, 3.21, 5.075}, {7, 4.26, 5.1}, {9, 4.48, 5.1}}};
  static constexpr std::array<ResourceRow, 5> kResources{{{"original", 0, 26, 3849, 3020},
                                                     {"pwl3", 3, 0, 203, 34},
                                                     {"pwl5", 5, 0, 570, 98},
                                                     {"pwl7", 7, 0, 1076, 164},
                                                     {"pwl9", 9, 0, 1374, 230}}};

  /// FNV-1a over every constant, in declaration order.
  static std::uint64_t checksum();
};

}  // namespace pwleq

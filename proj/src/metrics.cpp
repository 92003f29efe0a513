// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pwleq/activation.hpp"

namespace pwleq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Position on one axis -> Gray code, for levels = sqrt(order).
int axis_code(double v, int levels, double scale) {
  const double pos = (v / scale + (levels - 1)) / 2.0;
  const int j = std::clamp(static_cast<int>(std::lround(pos)), 0, levels - 1);
  return j ^ (j >> 1);
}

std::uint64_t count_errors(std::span<const std::complex<double>> decided_from,
                           std::span<const std::complex<double>> reference, int order) {
  const auto a = hard_decision(decided_from, order);
  const auto b = hard_decision(reference, order);
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) errors += a[i] != b[i];
  return errors;
}

std::vector<std::complex<double>> rows_to_complex(const Matrix<double>& m) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) out[t] = {m(t, 0), m(t, 1)};
  return out;
}

}  // namespace

std::vector<std::uint8_t> hard_decision(std::span<const std::complex<double>> y, int order) {
  const int bits = bits_per_symbol(order);
  const int k = bits / 2;
  const int levels = 1 << k;
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  std::vector<std::uint8_t> out;
  out.reserve(y.size() * bits);
  for (const auto& s : y) {
    const int code = (axis_code(s.real(), levels, scale) << k) | axis_code(s.imag(), levels, scale);
    for (int b = bits - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((code >> b) & 1));
  }
  return out;
}

std::uint64_t bit_errors_between(const Matrix<double>& decided, const Matrix<double>& reference,
                                 int order) {
  detail::require(decided.rows() == reference.rows() && decided.cols() == 2 && reference.cols() == 2,
                  "bit_errors_between: expected matching N x 2 matrices");
  return count_errors(rows_to_complex(decided), rows_to_complex(reference), order);
}

double erfcinv(double p) {
  if (!(p > 0.0 && p < 2.0)) throw std::domain_error("erfcinv: argument must lie in (0, 2)");
  if (p == 1.0) return 0.0;
  if (p > 1.0) return -erfcinv(2.0 - p);
  // erfc is decreasing on [0, inf); erfc(27) underflows below any positive double.
  double lo = 0.0, hi = 27.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid) > p) lo = mid; else hi = mid;
  }
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double f = std::erfc(y) - p;
    const double df = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-y * y);
    if (df == 0.0) break;
    const double next = y - f / df;
    if (!(next > lo - 1e-300 && next < hi + 1e-300) || std::abs(next - y) == 0.0) break;
    y = next;
  }
  return y;
}

double q_factor_db(double ber) {
  if (std::isnan(ber) || ber < 0.0) throw std::domain_error("q_factor_db: ber must be >= 0");
  if (ber == 0.0) return kInf;
  if (ber >= 0.5) return -kInf;
  return 20.0 * std::log10(std::numbers::sqrt2 * erfcinv(2.0 * ber));
}

std::string format_q(double q_db) {
  if (q_db == kInf) return kInfiniteQ;
  if (q_db == -kInf) return kZeroQ;
  return format_double(q_db);
}

double parse_q(const std::string& text) {
  if (text == kInfiniteQ) return kInf;
  if (text == kZeroQ) return -kInf;
  return std::stod(text);
}

QResult q_result(std::uint64_t bit_errors, std::uint64_t n_bits) {
  QResult r;
  r.n_bits = n_bits;
  r.bit_errors = bit_errors;
  r.ber = n_bits == 0 ? 0.0 : static_cast<double>(bit_errors) / static_cast<double>(n_bits);
  r.q_db = q_factor_db(r.ber);
  return r;
}

QResult evaluate(const EqualizerParams& params, const ActivationSet& acts,
                 std::span<const WindowPair> windows, int order) {
  constexpr std::size_t kChunk = 16;
  const int bits = bits_per_symbol(order);
  std::uint64_t errors = 0;
  std::vector<Matrix<double>> batch;
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    const std::size_t end = std::min(windows.size(), start + kChunk);
    batch.clear();
    for (std::size_t w = start; w < end; ++w) batch.push_back(windows[w].window);
    const auto fw = forward_batch(params, batch, acts);
    for (std::size_t w = start; w < end; ++w) {
      errors += bit_errors_between(fw.output(static_cast<Eigen::Index>(w - start)),
                                   windows[w].target, order);
    }
  }
  return q_result(errors, static_cast<std::uint64_t>(windows.size()) * kOutputLength * bits);
}

QResult evaluate_unequalized(std::span<const WindowPair> windows, int order) {
  const int bits = bits_per_symbol(order);
  std::uint64_t errors = 0;
  for (const auto& w : windows) {
    errors += bit_errors_between(w.window.middleRows(kContext, kOutputLength), w.target, order);
  }
  return q_result(errors, static_cast<std::uint64_t>(windows.size()) * kOutputLength * bits);
}

std::string result_record(const std::string& label, int segments, const std::string& mode,
                          const QResult& r) {
  return label + "," + std::to_string(segments) + "," + mode + "," + format_double(r.ber) + "," +
         format_q(r.q_db) + "," + std::to_string(r.n_bits);
}

std::uint64_t PublishedReference::checksum() {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(kBaselineQ);
  for (const auto& p : kSegmentSweep) {
    feed(p.segments);
    feed(p.q_no_retrain);
    feed(p.q_retrain);
  }
  for (const auto& r : kResources) {
    feed(r.segments);
    feed(r.dsp);
    feed(r.lut);
    feed(r.ff);
  }
  return h;
}

}  // namespace pwleq

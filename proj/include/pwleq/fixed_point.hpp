// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "pwleq/activation.hpp"

namespace pwleq {

/// Signed two's-complement format with `total_bits` bits, `frac_bits` of them
/// fractional.
struct FixedFormat {
  int total_bits = 16;
  int frac_bits = 12;

  void validate() const;
  std::int64_t raw_min() const { return -(std::int64_t{1} << (total_bits - 1)); }
  std::int64_t raw_max() const { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  double resolution() const;
  double min_value() const;
  double max_value() const;

  bool operator==(const FixedFormat&) const = default;
};

struct FixedValue {
  std::int64_t raw = 0;
  FixedFormat format;

  double value() const;
  bool operator==(const FixedValue&) const = default;
};

/// Round half to even onto the format's grid, then saturate.
FixedValue quantize(double x, FixedFormat format);

/// Arithmetic right shift of `value` by `shift` bits with round-half-to-even;
/// a negative shift is an exact left shift.
std::int64_t shift_round_half_even(std::int64_t value, int shift);

std::int64_t saturate(std::int64_t raw, FixedFormat format);

/// A PwlSpec with breakpoints quantized to the input format and slopes and
/// intercepts quantized to the coefficient format.
struct FixedPwl {
  FixedFormat input_format;
  FixedFormat coeff_format;
  std::vector<std::int64_t> breakpoints;
  std::vector<std::int64_t> slopes;
  std::vector<std::int64_t> intercepts;
};

FixedPwl quantize_spec(const PwlSpec& spec, FixedFormat input_format, FixedFormat coeff_format);

/// Integer datapath: pick the segment by comparing x.raw with the quantized
/// breakpoints (right-segment convention), multiply in double width, shift to
/// the output fraction with round-half-to-even, add the intercept converted to
/// the output format. Every stage saturates.
FixedValue eval_pwl_fixed(const FixedPwl& pwl, FixedValue x, FixedFormat out_format);

/// Convenience form that quantizes `spec` against x's format first.
FixedValue eval_pwl_fixed(const PwlSpec& spec, FixedValue x, FixedFormat coeff_format,
                          FixedFormat out_format);

inline constexpr FixedFormat kDefaultFixedFormat{16, 12};

}  // namespace pwleq

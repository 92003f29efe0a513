// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pwleq {

void FixedFormat::validate() const {
  if (total_bits < 4 || total_bits > 32 || frac_bits < 0 || frac_bits >= total_bits) {
    throw std::invalid_argument("invalid fixed-point format {" + std::to_string(total_bits) + "," +
                                std::to_string(frac_bits) + "}");
  }
}

double FixedFormat::resolution() const { return std::ldexp(1.0, -frac_bits); }
double FixedFormat::min_value() const { return std::ldexp(static_cast<double>(raw_min()), -frac_bits); }
double FixedFormat::max_value() const { return std::ldexp(static_cast<double>(raw_max()), -frac_bits); }

double FixedValue::value() const { return std::ldexp(static_cast<double>(raw), -format.frac_bits); }

std::int64_t saturate(std::int64_t raw, FixedFormat format) {
  return std::clamp(raw, format.raw_min(), format.raw_max());
}

FixedValue quantize(double x, FixedFormat format) {
  format.validate();
  if (!std::isfinite(x)) throw std::domain_error("quantize: non-finite input");
  const double scaled = std::ldexp(x, format.frac_bits);
  // Clamp before converting so huge inputs never overflow int64.
  const double lo = static_cast<double>(format.raw_min()) - 1.0;
  const double hi = static_cast<double>(format.raw_max()) + 1.0;
  const double bounded = std::clamp(scaled, lo, hi);
  double whole = std::floor(bounded);
  const double frac = bounded - whole;
  if (frac > 0.5 || (frac == 0.5 && std::fmod(whole, 2.0) != 0.0)) whole += 1.0;
  return FixedValue{saturate(static_cast<std::int64_t>(whole), format), format};
}

std::int64_t shift_round_half_even(std::int64_t value, int shift) {
  if (shift <= 0) {
    const __int128 wide = static_cast<__int128>(value) << -shift;
    return static_cast<std::int64_t>(std::clamp<__int128>(wide, INT64_MIN, INT64_MAX));
  }
  const std::int64_t floor_q = value >> shift;  // arithmetic shift floors
  const std::int64_t rem = value - floor_q * (std::int64_t{1} << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (rem > half || (rem == half && (floor_q & 1) != 0)) return floor_q + 1;
  return floor_q;
}

FixedPwl quantize_spec(const PwlSpec& spec, FixedFormat input_format, FixedFormat coeff_format) {
  input_format.validate();
  coeff_format.validate();
  spec.validate();
  FixedPwl out{input_format, coeff_format, {}, {}, {}};
  // Breakpoints above the input range map to raw_max + 1 so the last segment
  // stays unreachable instead of swallowing the top code.
  for (double b : spec.breakpoints) {
    const double scaled = std::nearbyint(std::ldexp(b, input_format.frac_bits));
    const double hi = static_cast<double>(input_format.raw_max()) + 1.0;
    out.breakpoints.push_back(static_cast<std::int64_t>(
        std::clamp(scaled, static_cast<double>(input_format.raw_min()), hi)));
  }
  for (double m : spec.slopes) out.slopes.push_back(quantize(m, coeff_format).raw);
  for (double c : spec.intercepts) out.intercepts.push_back(quantize(c, coeff_format).raw);
  return out;
}

FixedValue eval_pwl_fixed(const FixedPwl& pwl, FixedValue x, FixedFormat out_format) {
  out_format.validate();
  if (!(x.format == pwl.input_format)) {
    throw std::invalid_argument("eval_pwl_fixed: input format differs from quantized spec");
  }
  // Clamped breakpoints can collide, so count rather than binary search.
  std::size_t seg = 0;
  while (seg < pwl.breakpoints.size() && x.raw >= pwl.breakpoints[seg]) ++seg;

  const int product_frac = pwl.coeff_format.frac_bits + x.format.frac_bits;
  const std::int64_t product = pwl.slopes[seg] * x.raw;
  const std::int64_t scaled =
      saturate(shift_round_half_even(product, product_frac - out_format.frac_bits), out_format);
  const std::int64_t intercept = saturate(
      shift_round_half_even(pwl.intercepts[seg], pwl.coeff_format.frac_bits - out_format.frac_bits),
      out_format);
  return FixedValue{saturate(scaled + intercept, out_format), out_format};
}

FixedValue eval_pwl_fixed(const PwlSpec& spec, FixedValue x, FixedFormat coeff_format,
                          FixedFormat out_format) {
  return eval_pwl_fixed(quantize_spec(spec, x.format, coeff_format), x, out_format);
}

}  // namespace pwleq

// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pwleq/fixed_point.hpp"

using namespace pwleq;

namespace {
constexpr FixedFormat k86{8, 6};
}

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(0.5, k86).raw, 32);
  EXPECT_EQ(quantize(0.5, k86).value(), 0.5);
  EXPECT_EQ(quantize(1.0 / 3.0, k86).raw, 21);
  EXPECT_EQ(quantize(1.0 / 3.0, k86).value(), 0.328125);
  EXPECT_EQ(quantize(100.0, k86).raw, 127);
  EXPECT_EQ(quantize(100.0, k86).value(), 1.984375);
  EXPECT_EQ(quantize(-100.0, k86).raw, -128);
  EXPECT_EQ(quantize(-1e300, k86).raw, -128);
}

TEST(Quantize, TiesToEven) {
  EXPECT_EQ(quantize(0.5 / 64, k86).raw, 0);
  EXPECT_EQ(quantize(1.5 / 64, k86).raw, 2);
  EXPECT_EQ(quantize(2.5 / 64, k86).raw, 2);
  EXPECT_EQ(quantize(-0.5 / 64, k86).raw, 0);
  EXPECT_EQ(quantize(-1.5 / 64, k86).raw, -2);
}

TEST(Quantize, RejectsBadInput) {
  EXPECT_THROW(quantize(std::nan(""), k86), std::domain_error);
  EXPECT_THROW(quantize(1.0, FixedFormat{2, 1}), std::invalid_argument);
  EXPECT_THROW(quantize(1.0, FixedFormat{40, 10}), std::invalid_argument);
  EXPECT_THROW(quantize(1.0, FixedFormat{8, 8}), std::invalid_argument);
}

TEST(ShiftRound, MatchesOracle) {
  for (std::int64_t v = -5000; v <= 5000; v += 7) {
    for (int s = -3; s <= 9; ++s) EXPECT_EQ(shift_round_half_even(v, s), oracle::round_shift(v, s));
  }
}

TEST(EvalPwlFixed, Examples) {
  const auto t = fit_hard(ActivationKind::Tanh);
  EXPECT_EQ(eval_pwl_fixed(t, quantize(0.0, k86), k86, k86).raw, 0);
  EXPECT_EQ(eval_pwl_fixed(t, quantize(3.0, k86), k86, k86), quantize(1.0, k86));
  EXPECT_EQ(eval_pwl_fixed(t, quantize(3.0, k86), k86, k86).raw, 64);
  // Slope 0.25 -> raw 16, x = 1 -> raw 64; (16 * 64) >> 6 = 16, plus intercept 32.
  const auto s = fit_hard(ActivationKind::Sigmoid);
  const auto y = eval_pwl_fixed(s, quantize(1.0, k86), k86, k86);
  EXPECT_EQ(y.raw, 48);
  EXPECT_EQ(y.value(), 0.75);
}

TEST(EvalPwlFixed, ExhaustiveAgainstIntegerOracle) {
  for (auto kind : {ActivationKind::Tanh, ActivationKind::Sigmoid}) {
    for (int k : {3, 5, 7, 9}) {
      const auto spec = k == 3 ? fit_hard(kind) : fit_chord(kind, k, 3.0);
      for (int frac : {4, 5, 6}) {
        const FixedFormat io{8, frac};
        for (const FixedFormat coeff : {FixedFormat{8, 6}, FixedFormat{12, 10}, FixedFormat{16, 12}}) {
          const auto table = quantize_spec(spec, io, coeff);
          for (std::int64_t raw = io.raw_min(); raw <= io.raw_max(); ++raw) {
            const auto got = eval_pwl_fixed(table, FixedValue{raw, io}, io);
            const auto want = oracle::pwl_fixed(spec, raw, 8, frac, coeff.total_bits, coeff.frac_bits);
            ASSERT_EQ(got.raw, want) << "kind " << to_string(kind) << " K=" << k << " raw=" << raw;
          }
        }
      }
    }
  }
}

TEST(EvalPwlFixed, InputFormatMustMatchTable) {
  const auto table = quantize_spec(fit_hard(ActivationKind::Tanh), k86, k86);
  EXPECT_THROW(eval_pwl_fixed(table, FixedValue{0, FixedFormat{8, 5}}, k86), std::invalid_argument);
}

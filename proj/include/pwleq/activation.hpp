// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pwleq {

enum class ActivationKind { Sigmoid, Tanh };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation_kind(std::string_view text);

/// Continuous piecewise-linear function with K segments.
///
/// Segment i covers [breakpoints[i-1], breakpoints[i]); a point equal to a
/// breakpoint belongs to the segment on its right. Segment 0 and K-1 extend to
/// minus and plus infinity.
struct PwlSpec {
  ActivationKind kind = ActivationKind::Tanh;
  std::vector<double> breakpoints;  // K-1, strictly increasing
  std::vector<double> slopes;       // K
  std::vector<double> intercepts;   // K

  int segments() const { return static_cast<int>(slopes.size()); }

  /// Index of the segment containing x.
  int segment_of(double x) const;

  /// Throws std::invalid_argument when sizes, ordering or continuity are broken.
  void validate() const;

  bool operator==(const PwlSpec&) const = default;
};

/// Exact sigmoid or tanh. Overflow-safe for any finite x.
double eval_exact(ActivationKind kind, double x);

/// Derivative of the exact function at x.
double grad_exact(ActivationKind kind, double x);

/// Canonical 3-segment tangent-clamp: hard tanh (slope 1 on [-1, 1]) and hard
/// sigmoid (slope 1/4 on [-2, 2]).
PwlSpec fit_hard(ActivationKind kind);

/// Chord interpolation on K-1 breakpoints uniformly spaced over
/// [-half_range, half_range], constant tails. segments must be 3, 5, 7 or 9.
PwlSpec fit_chord(ActivationKind kind, int segments, double half_range);

/// Best symmetric chord spec over a candidate breakpoint grid
/// {i * search_half_range / (grid_points - 1) : i = 1 .. grid_points - 1},
/// minimizing max_abs_error on the default dense grid. The search is exact over
/// the candidate set (dynamic programming over segment-local errors).
PwlSpec fit_minimax(ActivationKind kind, int segments, double search_half_range,
                    int grid_points);

/// Builds a spec that interpolates (knots_x[i], knots_y[i]) with constant
/// tails. knots_x must be strictly increasing and contain at least two points.
PwlSpec pwl_from_knots(ActivationKind kind, const std::vector<double>& knots_x,
                       const std::vector<double>& knots_y);

double eval_pwl(const PwlSpec& spec, double x);
double grad_pwl(const PwlSpec& spec, double x);

inline constexpr double kDefaultErrorHalfRange = 8.0;
inline constexpr int kDefaultErrorGridPoints = 16001;

/// Max of |eval_pwl - eval_exact| over a uniform grid on [-half_range, half_range].
double max_abs_error(const PwlSpec& spec, double grid_half_range = kDefaultErrorHalfRange,
                     int grid_points = kDefaultErrorGridPoints);

/// Flat text record `kind,K,b_1..b_{K-1},m_1..m_K,c_1..c_K` with shortest
/// round-trip formatting.
std::string to_record(const PwlSpec& spec);
PwlSpec parse_record(std::string_view record);

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace pwleq

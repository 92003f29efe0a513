// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/activation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pwleq {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(what) + ": non-finite input");
  }
}

void require_fitter_segments(int segments) {
  if (segments != 3 && segments != 5 && segments != 7 && segments != 9) {
    throw std::invalid_argument("segments must be one of 3, 5, 7, 9; got " +
                                std::to_string(segments));
  }
}

double saturation_value(ActivationKind kind, bool upper) {
  if (upper) return 1.0;
  return kind == ActivationKind::Tanh ? -1.0 : 0.0;
}

// Mirror positive breakpoints into a symmetric knot set and interpolate.
PwlSpec symmetric_chord_spec(ActivationKind kind, const std::vector<double>& positive) {
  std::vector<double> xs;
  xs.reserve(2 * positive.size());
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) xs.push_back(-*it);
  xs.insert(xs.end(), positive.begin(), positive.end());
  std::vector<double> ys(xs.size());
  std::transform(xs.begin(), xs.end(), ys.begin(),
                 [kind](double x) { return eval_exact(kind, x); });
  return pwl_from_knots(kind, xs, ys);
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  return kind == ActivationKind::Sigmoid ? "sigmoid" : "tanh";
}

ActivationKind parse_activation_kind(std::string_view text) {
  if (text == "sigmoid") return ActivationKind::Sigmoid;
  if (text == "tanh") return ActivationKind::Tanh;
  throw std::invalid_argument("unknown activation kind '" + std::string(text) + "'");
}

int PwlSpec::segment_of(double x) const {
  return static_cast<int>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x) -
                          breakpoints.begin());
}

void PwlSpec::validate() const {
  const auto k = slopes.size();
  if (k < 2) throw std::invalid_argument("PwlSpec needs at least 2 segments");
  if (intercepts.size() != k || breakpoints.size() != k - 1) {
    throw std::invalid_argument("PwlSpec: breakpoints/slopes/intercepts sizes disagree");
  }
  for (std::size_t i = 0; i < k - 1; ++i) {
    const double b = breakpoints[i];
    if (!std::isfinite(b) || (i > 0 && !(breakpoints[i - 1] < b))) {
      throw std::invalid_argument("PwlSpec: breakpoints must be finite and strictly increasing");
    }
    const double left = slopes[i] * b + intercepts[i];
    const double right = slopes[i + 1] * b + intercepts[i + 1];
    if (std::abs(left - right) > 1e-12) {
      throw std::invalid_argument("PwlSpec: discontinuity at breakpoint " + format_double(b));
    }
  }
}

double eval_exact(ActivationKind kind, double x) {
  require_finite(x, "eval_exact");
  if (kind == ActivationKind::Tanh) return std::tanh(x);
  const double e = std::exp(-std::abs(x));
  return x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

double grad_exact(ActivationKind kind, double x) {
  const double y = eval_exact(kind, x);
  return kind == ActivationKind::Tanh ? 1.0 - y * y : y * (1.0 - y);
}

PwlSpec pwl_from_knots(ActivationKind kind, const std::vector<double>& knots_x,
                       const std::vector<double>& knots_y) {
  if (knots_x.size() < 2 || knots_x.size() != knots_y.size()) {
    throw std::invalid_argument("pwl_from_knots: need >= 2 matching knots");
  }
  PwlSpec spec;
  spec.kind = kind;
  spec.breakpoints = knots_x;
  const std::size_t k = knots_x.size() + 1;
  spec.slopes.assign(k, 0.0);
  spec.intercepts.assign(k, 0.0);
  spec.intercepts.front() = knots_y.front();
  spec.intercepts.back() = knots_y.back();
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double x0 = knots_x[i - 1], x1 = knots_x[i];
    if (!(x0 < x1)) throw std::invalid_argument("pwl_from_knots: knots not increasing");
    const double m = (knots_y[i] - knots_y[i - 1]) / (x1 - x0);
    spec.slopes[i] = m;
    spec.intercepts[i] = knots_y[i - 1] - m * x0;
  }
  spec.validate();
  return spec;
}

PwlSpec fit_hard(ActivationKind kind) {
  // Tangent at the origin, clamped where it meets the saturation levels.
  const double corner = kind == ActivationKind::Tanh ? 1.0 : 2.0;
  return pwl_from_knots(kind, {-corner, corner},
                        {saturation_value(kind, false), saturation_value(kind, true)});
}

PwlSpec fit_chord(ActivationKind kind, int segments, double half_range) {
  require_fitter_segments(segments);
  if (!(half_range > 0.0) || !std::isfinite(half_range)) {
    throw std::invalid_argument("fit_chord: half_range must be positive");
  }
  // K-1 breakpoints at -T + j*2T/(K-2); the positive ones are T*m/(K-2), m odd.
  const int denom = segments - 2;
  std::vector<double> positive;
  for (int m = 1; m <= denom; m += 2) positive.push_back(half_range * m / denom);
  return symmetric_chord_spec(kind, positive);
}

PwlSpec fit_minimax(ActivationKind kind, int segments, double search_half_range,
                    int grid_points) {
  require_fitter_segments(segments);
  if (grid_points < 101) throw std::invalid_argument("fit_minimax: grid_points must be >= 101");
  if (!(search_half_range > 0.0) || !std::isfinite(search_half_range)) {
    throw std::invalid_argument("fit_minimax: search_half_range must be positive");
  }

  // Non-negative half of the default error grid. Both functions are point
  // symmetric about (0, f(0)), so the half grid decides the full error.
  const int n_dense = kDefaultErrorGridPoints;
  const double step = 2.0 * kDefaultErrorHalfRange / (n_dense - 1);
  std::vector<double> xs, fs;
  for (int i = (n_dense - 1) / 2; i < n_dense; ++i) {
    const double x = -kDefaultErrorHalfRange + i * step;
    xs.push_back(x);
    fs.push_back(eval_exact(kind, x));
  }
  const auto first_at_or_above = [&](double v) {
    return static_cast<int>(std::lower_bound(xs.begin(), xs.end(), v) - xs.begin());
  };

  const int n_cand = grid_points - 1;
  std::vector<double> cand(n_cand), fcand(n_cand);
  std::vector<int> lo(n_cand);
  for (int j = 0; j < n_cand; ++j) {
    cand[j] = search_half_range * (j + 1) / (grid_points - 1);
    fcand[j] = eval_exact(kind, cand[j]);
    lo[j] = first_at_or_above(cand[j]);
  }
  const double f0 = eval_exact(kind, 0.0);
  const int n_half = static_cast<int>(xs.size());

  // Segment-local errors: middle chord through (-b, f(-b)) and (b, f(b)),
  // constant tail beyond b, chord between two positive breakpoints.
  std::vector<double> middle(n_cand), tail(n_cand);
  for (int j = 0; j < n_cand; ++j) {
    const double slope = (fcand[j] - f0) / cand[j];
    double err = 0.0;
    for (int i = 0; i < n_half && xs[i] <= cand[j]; ++i) {
      err = std::max(err, std::abs(f0 + slope * xs[i] - fs[i]));
    }
    middle[j] = err;
    double terr = 0.0;
    for (int i = lo[j]; i < n_half; ++i) terr = std::max(terr, std::abs(fcand[j] - fs[i]));
    tail[j] = terr;
  }

  const int pairs = (segments - 1) / 2;
  std::vector<double> chord;
  if (pairs > 1) {
    chord.assign(static_cast<std::size_t>(n_cand) * n_cand, 0.0);
    for (int a = 0; a < n_cand; ++a) {
      for (int b = a + 1; b < n_cand; ++b) {
        const double slope = (fcand[b] - fcand[a]) / (cand[b] - cand[a]);
        double err = 0.0;
        for (int i = lo[a]; i < n_half && xs[i] <= cand[b]; ++i) {
          err = std::max(err, std::abs(fcand[a] + slope * (xs[i] - cand[a]) - fs[i]));
        }
        chord[static_cast<std::size_t>(a) * n_cand + b] = err;
      }
    }
  }

  // best[l][j]: smallest achievable max error using l+1 positive breakpoints
  // with the outermost at candidate j.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(pairs, std::vector<double>(n_cand, kInf));
  std::vector<std::vector<int>> parent(pairs, std::vector<int>(n_cand, -1));
  best[0] = middle;
  for (int l = 1; l < pairs; ++l) {
    for (int j = 0; j < n_cand; ++j) {
      for (int i = 0; i < j; ++i) {
        const double v = std::max(best[l - 1][i], chord[static_cast<std::size_t>(i) * n_cand + j]);
        if (v < best[l][j]) {
          best[l][j] = v;
          parent[l][j] = i;
        }
      }
    }
  }
  int outer = -1;
  double best_err = kInf;
  for (int j = 0; j < n_cand; ++j) {
    const double v = std::max(best[pairs - 1][j], tail[j]);
    if (v < best_err) {
      best_err = v;
      outer = j;
    }
  }
  if (outer < 0) {
    throw std::invalid_argument("fit_minimax: candidate grid too coarse for segment count");
  }

  std::vector<double> positive(pairs);
  for (int l = pairs - 1, j = outer; l >= 0; --l) {
    positive[l] = cand[j];
    j = parent[l][j];
  }
  return symmetric_chord_spec(kind, positive);
}

double eval_pwl(const PwlSpec& spec, double x) {
  require_finite(x, "eval_pwl");
  const int s = spec.segment_of(x);
  return spec.slopes[s] * x + spec.intercepts[s];
}

double grad_pwl(const PwlSpec& spec, double x) {
  require_finite(x, "grad_pwl");
  return spec.slopes[spec.segment_of(x)];
}

double max_abs_error(const PwlSpec& spec, double grid_half_range, int grid_points) {
  if (grid_points < 1001) throw std::invalid_argument("max_abs_error: grid_points must be >= 1001");
  const double step = 2.0 * grid_half_range / (grid_points - 1);
  double err = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double x = -grid_half_range + i * step;
    err = std::max(err, std::abs(eval_pwl(spec, x) - eval_exact(spec.kind, x)));
  }
  return err;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string to_record(const PwlSpec& spec) {
  std::string out(to_string(spec.kind));
  out += ',';
  out += std::to_string(spec.segments());
  for (const auto* list : {&spec.breakpoints, &spec.slopes, &spec.intercepts}) {
    for (double v : *list) {
      out += ',';
      out += format_double(v);
    }
  }
  return out;
}

PwlSpec parse_record(std::string_view record) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = record.find(',');
    auto field = record.substr(0, comma);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r' ||
                              field.back() == '\n')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    record.remove_prefix(comma + 1);
  }
  if (fields.size() < 2) throw std::invalid_argument("PwlSpec record: too few fields");

  PwlSpec spec;
  spec.kind = parse_activation_kind(fields[0]);
  int k = 0;
  const auto kres = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), k);
  if (kres.ec != std::errc{} || k < 2) throw std::invalid_argument("PwlSpec record: bad K");
  if (fields.size() != static_cast<std::size_t>(2 + (k - 1) + 2 * k)) {
    throw std::invalid_argument("PwlSpec record: expected " + std::to_string(2 + 3 * k - 1) +
                                " fields, got " + std::to_string(fields.size()));
  }
  std::vector<double> values;
  for (std::size_t i = 2; i < fields.size(); ++i) {
    double v = 0.0;
    const auto f = fields[i];
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
      throw std::invalid_argument("PwlSpec record: bad number '" + std::string(f) + "'");
    }
    values.push_back(v);
  }
  spec.breakpoints.assign(values.begin(), values.begin() + (k - 1));
  spec.slopes.assign(values.begin() + (k - 1), values.begin() + (2 * k - 1));
  spec.intercepts.assign(values.begin() + (2 * k - 1), values.end());
  spec.validate();
  return spec;
}

}  // namespace pwleq

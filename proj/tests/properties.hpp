// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized property suites. Every suite draws `cases` independent inputs
// from a seeded generator and reports how many violated the property.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pwleq/activation.hpp"
#include "pwleq/channel.hpp"
#include "pwleq/fixed_point.hpp"
#include "pwleq/hwcost.hpp"
#include "pwleq/metrics.hpp"
#include "pwleq/model.hpp"
#include "pwleq/nncore.hpp"

namespace props {

struct Outcome {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0 && cases > 0; }
};

class Recorder {
 public:
  explicit Recorder(std::string name) { out_.name = std::move(name); }
  void check(bool ok, const std::function<std::string()>& detail) {
    if (!ok) {
      if (out_.failures == 0) out_.first_failure = detail();
      ++out_.failures;
    }
  }
  void next_case() { ++out_.cases; }
  Outcome done() { return out_; }

 private:
  Outcome out_;
};

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// A small pool of minimax specs (the fitter is the slow one), reused across cases.
inline const std::vector<pwleq::PwlSpec>& minimax_pool() {
  static const std::vector<pwleq::PwlSpec> pool = [] {
    std::vector<pwleq::PwlSpec> out;
    Rng rng(11);
    for (int i = 0; i < 24; ++i) {
      const auto kind = i % 2 ? pwleq::ActivationKind::Sigmoid : pwleq::ActivationKind::Tanh;
      const int k = 3 + 2 * ((i / 2) % 4);
      out.push_back(pwleq::fit_minimax(kind, k, uniform(rng, 1.0, 6.0), pick(rng, 101, 161)));
    }
    return out;
  }();
  return pool;
}

inline pwleq::PwlSpec random_spec(Rng& rng) {
  const auto kind = pick(rng, 0, 1) ? pwleq::ActivationKind::Sigmoid : pwleq::ActivationKind::Tanh;
  switch (pick(rng, 0, 2)) {
    case 0: return pwleq::fit_hard(kind);
    case 1: return pwleq::fit_chord(kind, 3 + 2 * pick(rng, 0, 3), uniform(rng, 0.2, 8.0));
    default: {
      const auto& pool = minimax_pool();
      return pool[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(pool.size()) - 1))];
    }
  }
}

inline std::string describe(const pwleq::PwlSpec& s) { return pwleq::to_record(s); }

// ---------------------------------------------------------------------------
// activation

inline Outcome pwl_continuity(int cases, std::uint64_t seed) {
  Recorder r("pwl continuity at breakpoints");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    for (std::size_t i = 0; i < s.breakpoints.size(); ++i) {
      const double b = s.breakpoints[i];
      const double left = s.slopes[i] * b + s.intercepts[i];
      const double right = s.slopes[i + 1] * b + s.intercepts[i + 1];
      r.check(std::abs(left - right) <= 1e-12, [&] { return describe(s) + " at " + std::to_string(b); });
    }
  }
  return r.done();
}

inline Outcome pwl_symmetry(int cases, std::uint64_t seed) {
  Recorder r("pwl odd/complement symmetry");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    for (int j = 0; j < 10; ++j) {
      const double x = uniform(rng, -12.0, 12.0);
      const double a = pwleq::eval_pwl(s, x), b = pwleq::eval_pwl(s, -x);
      const double err = s.kind == pwleq::ActivationKind::Tanh ? std::abs(a + b) : std::abs(a + b - 1.0);
      r.check(err < 1e-12, [&] { return describe(s) + " x=" + std::to_string(x); });
    }
  }
  return r.done();
}

inline Outcome pwl_monotone(int cases, std::uint64_t seed) {
  Recorder r("pwl non-decreasing");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    for (double m : s.slopes) r.check(m >= 0.0, [&] { return describe(s) + " negative slope"; });
    double x0 = uniform(rng, -12.0, 12.0), x1 = uniform(rng, -12.0, 12.0);
    if (x1 < x0) std::swap(x0, x1);
    r.check(pwleq::eval_pwl(s, x0) <= pwleq::eval_pwl(s, x1),
            [&] { return describe(s) + " " + std::to_string(x0) + " " + std::to_string(x1); });
  }
  return r.done();
}

inline Outcome pwl_codomain(int cases, std::uint64_t seed) {
  Recorder r("pwl codomain bounds");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    const double lo = s.kind == pwleq::ActivationKind::Tanh ? -1.0 : 0.0;
    for (int j = 0; j < 10; ++j) {
      const double x = uniform(rng, -50.0, 50.0);
      const double y = pwleq::eval_pwl(s, x);
      r.check(y >= lo && y <= 1.0, [&] { return describe(s) + " x=" + std::to_string(x); });
    }
  }
  return r.done();
}

inline Outcome pwl_gradient(int cases, std::uint64_t seed) {
  Recorder r("grad_pwl matches finite difference");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    double x = 0.0;
    bool clear = false;
    while (!clear) {
      x = uniform(rng, -10.0, 10.0);
      clear = std::none_of(s.breakpoints.begin(), s.breakpoints.end(),
                           [&](double b) { return std::abs(x - b) <= 1e-3; });
    }
    const double fd = (pwleq::eval_pwl(s, x + 1e-6) - pwleq::eval_pwl(s, x - 1e-6)) / 2e-6;
    r.check(std::abs(fd - pwleq::grad_pwl(s, x)) < 1e-6,
            [&] { return describe(s) + " x=" + std::to_string(x); });
  }
  return r.done();
}

/// |fixed - float| <= 2^-frac_out * (2 + max |slope|) over every 8-bit input.
inline Outcome fixed_point_bound(int cases, std::uint64_t seed) {
  Recorder r("fixed-point error bound");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto s = random_spec(rng);
    const pwleq::FixedFormat io{8, pick(rng, 3, 6)};
    const int cfrac = pick(rng, io.frac_bits + 4, 14);
    const pwleq::FixedFormat coeff{16, cfrac};
    const auto table = pwleq::quantize_spec(s, io, coeff);
    double slope_max = 0.0;
    for (double m : s.slopes) slope_max = std::max(slope_max, std::abs(m));
    const double bound = std::ldexp(1.0, -io.frac_bits) * (2.0 + slope_max);
    for (std::int64_t raw = io.raw_min(); raw <= io.raw_max(); ++raw) {
      const pwleq::FixedValue x{raw, io};
      const double got = pwleq::eval_pwl_fixed(table, x, io).value();
      const double want = pwleq::eval_pwl(s, x.value());
      r.check(std::abs(got - want) <= bound, [&] {
        return describe(s) + " io frac " + std::to_string(io.frac_bits) + " raw " + std::to_string(raw);
      });
    }
  }
  return r.done();
}

// ---------------------------------------------------------------------------
// nncore / model

inline Outcome conv_length(int cases, std::uint64_t seed) {
  Recorder r("conv1d output length");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const int klen = pick(rng, 1, 9), T = pick(rng, klen, 40), cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
    auto w = pwleq::Conv1dWeights<double>::zeros(cout, cin, klen);
    const auto y = pwleq::conv1d_forward<double>(oracle::random_matrix(rng, T, cin), w);
    r.check(y.rows() == T - klen + 1 && y.cols() == cout,
            [&] { return "T=" + std::to_string(T) + " K=" + std::to_string(klen); });
  }
  return r.done();
}

/// Hidden units may be relabelled: permuting them inside every gate block
/// (and U's columns) permutes h and c the same way.
inline Outcome lstm_unit_permutation(int cases, std::uint64_t seed) {
  Recorder r("lstm hidden-unit relabelling");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const int H = pick(rng, 1, 5), I = pick(rng, 1, 3), T = pick(rng, 1, 6);
    pwleq::LstmWeights<double> w{oracle::random_matrix(rng, 4 * H, I), oracle::random_matrix(rng, 4 * H, H),
                                 oracle::random_matrix(rng, 4 * H, 1)};
    std::vector<int> perm(H);
    for (int i = 0; i < H; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    auto p = w;
    for (int g = 0; g < 4; ++g)
      for (int i = 0; i < H; ++i) {
        p.W.row(g * H + i) = w.W.row(g * H + perm[i]);
        p.b.row(g * H + i) = w.b.row(g * H + perm[i]);
        for (int j = 0; j < H; ++j) p.U(g * H + i, j) = w.U(g * H + perm[i], perm[j]);
      }
    const auto xs = oracle::random_matrix(rng, I, T);
    const auto gate = pwleq::ActivationFn::exact(pwleq::ActivationKind::Sigmoid);
    const auto state = pwleq::ActivationFn::exact(pwleq::ActivationKind::Tanh);
    const auto a = pwleq::lstm_sequence_forward(w, xs, T, 1, false, gate, state);
    const auto b = pwleq::lstm_sequence_forward(p, xs, T, 1, false, gate, state);
    double err = 0.0;
    for (int i = 0; i < H; ++i) {
      err = std::max(err, (b.hidden.row(i) - a.hidden.row(perm[i])).cwiseAbs().maxCoeff());
      err = std::max(err, (b.c.row(i) - a.c.row(perm[i])).cwiseAbs().maxCoeff());
    }
    r.check(err < 1e-12, [&] { return "H=" + std::to_string(H) + " err " + std::to_string(err); });
  }
  return r.done();
}

inline Outcome lstm_time_reversal(int cases, std::uint64_t seed) {
  Recorder r("lstm time-reversal consistency");
  Rng rng(seed);
  const auto gate = pwleq::ActivationFn::exact(pwleq::ActivationKind::Sigmoid);
  const auto state = pwleq::ActivationFn::exact(pwleq::ActivationKind::Tanh);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const int H = pick(rng, 1, 4), T = pick(rng, 1, 20), B = pick(rng, 1, 3);
    pwleq::LstmWeights<double> w{oracle::random_matrix(rng, 4 * H, 2), oracle::random_matrix(rng, 4 * H, H),
                                 oracle::random_matrix(rng, 4 * H, 1)};
    const auto xs = oracle::random_matrix(rng, 2, T * B);
    Eigen::MatrixXd flipped(2, T * B);
    for (int t = 0; t < T; ++t) flipped.middleCols((T - 1 - t) * B, B) = xs.middleCols(t * B, B);
    const auto rev = pwleq::lstm_sequence_forward(w, xs, T, B, true, gate, state);
    const auto fwd = pwleq::lstm_sequence_forward(w, flipped, T, B, false, gate, state);
    double err = 0.0;
    for (int t = 0; t < T; ++t) {
      err = std::max(err, (rev.hidden.middleCols(t * B, B) - fwd.hidden.middleCols((T - 1 - t) * B, B))
                              .cwiseAbs()
                              .maxCoeff());
    }
    r.check(err < 1e-12, [&] { return "T=" + std::to_string(T) + " err " + std::to_string(err); });
  }
  return r.done();
}

inline Outcome forward_determinism(int cases, std::uint64_t seed) {
  Recorder r("equalizer forward determinism");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto p = oracle::random_params(rng, pick(rng, 1, 3));
    const auto w = oracle::random_matrix(rng, pwleq::kWindowLength, 2);
    const auto acts = pwleq::ActivationSet::exact();
    const auto a = pwleq::equalizer_forward(p, w, acts);
    const auto b = pwleq::equalizer_forward(p, w, acts);
    r.check(a == b, [] { return std::string("outputs differ"); });
  }
  return r.done();
}

inline Outcome window_arithmetic(int cases, std::uint64_t seed) {
  Recorder r("window arithmetic");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto n = static_cast<std::size_t>(pick(rng, 0, 1500));
    const std::size_t expect = n < 81 ? 0 : (n - 81) / 61 + 1;
    r.check(pwleq::window_count(n) == expect, [&] { return "n=" + std::to_string(n); });
    if (n < 81) continue;
    std::vector<std::complex<double>> rx(n), tx(n);
    for (std::size_t i = 0; i < n; ++i) {
      rx[i] = {static_cast<double>(i), -static_cast<double>(i)};
      tx[i] = {static_cast<double>(i) + 0.5, 0.0};
    }
    const auto w = pwleq::window_stream(rx, tx);
    r.check(w.size() == expect, [&] { return "stream size, n=" + std::to_string(n); });
    if (w.empty()) continue;
    const std::size_t k = static_cast<std::size_t>(pick(rng, 0, static_cast<int>(w.size()) - 1));
    const double start = static_cast<double>(61 * k);
    const bool ok = w[k].window(0, 0) == start && w[k].window(80, 1) == -(start + 80) &&
                    w[k].target(0, 0) == start + 10.5 && w[k].target(60, 0) == start + 70.5 &&
                    w[k].window.rows() == 81 && w[k].target.rows() == 61;
    r.check(ok, [&] { return "content, n=" + std::to_string(n) + " k=" + std::to_string(k); });
  }
  return r.done();
}

// ---------------------------------------------------------------------------
// channel

inline Outcome channel_identity(int cases, std::uint64_t seed) {
  Recorder r("identity channel composition");
  Rng rng(seed);
  const int orders[] = {4, 16, 64};
  for (int c = 0; c < cases; ++c, r.next_case()) {
    pwleq::ChannelConfig cfg;
    cfg.qam_order = orders[pick(rng, 0, 2)];
    cfg.n_symbols = static_cast<std::size_t>(pick(rng, 1, 400));
    cfg.dispersion_strength = 0.0;
    cfg.kerr_gamma = 0.0;
    cfg.snr_db = pwleq::kNoNoise;
    cfg.seed = rng();
    const auto d = pwleq::build_dataset(cfg);
    r.check(d.rx == d.tx, [&] { return "seed " + std::to_string(cfg.seed); });
  }
  return r.done();
}

inline Outcome kerr_modulus(int cases, std::uint64_t seed) {
  Recorder r("kerr rotation preserves modulus");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    std::vector<std::complex<double>> x(static_cast<std::size_t>(pick(rng, 1, 64)));
    for (auto& v : x) v = {uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const double gamma = uniform(rng, -2.0, 2.0);
    const auto y = pwleq::kerr_rotate(x, gamma);
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.check(std::abs(std::abs(y[i]) - std::abs(x[i])) <= 1e-12, [&] { return "gamma " + std::to_string(gamma); });
    }
  }
  return r.done();
}

inline Outcome dispersion_unit_energy(int cases, std::uint64_t seed) {
  Recorder r("dispersion taps have unit energy");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const int taps = 1 + 2 * pick(rng, 0, 15);
    const double strength = uniform(rng, -3.0, 3.0);
    double e = 0.0;
    for (const auto& h : pwleq::dispersion_taps(taps, strength)) e += std::norm(h);
    r.check(std::abs(e - 1.0) <= 1e-12, [&] { return "taps " + std::to_string(taps); });
  }
  return r.done();
}

// ---------------------------------------------------------------------------
// metrics / hwcost

inline Outcome q_monotone(int cases, std::uint64_t seed) {
  Recorder r("Q strictly decreasing in BER");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    double a = std::pow(10.0, uniform(rng, -14.0, std::log10(0.4999)));
    double b = std::pow(10.0, uniform(rng, -14.0, std::log10(0.4999)));
    if (a == b) continue;
    if (b < a) std::swap(a, b);
    r.check(pwleq::q_factor_db(a) > pwleq::q_factor_db(b),
            [&] { return "ber " + std::to_string(a) + " vs " + std::to_string(b); });
  }
  return r.done();
}

inline Outcome q_inverse(int cases, std::uint64_t seed) {
  Recorder r("Q inverse consistency with erfc");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const double q_lin = uniform(rng, 0.05, 7.5);
    const double ber = 0.5 * std::erfc(q_lin / std::numbers::sqrt2);
    const double back = std::pow(10.0, pwleq::q_factor_db(ber) / 20.0);
    r.check(std::abs(back - q_lin) <= 1e-9 * q_lin,
            [&] { return "Q " + std::to_string(q_lin) + " -> " + std::to_string(back); });
  }
  return r.done();
}

inline Outcome evaluate_order_invariance(int cases, std::uint64_t seed) {
  Recorder r("evaluate invariant to window order");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const auto p = oracle::random_params(rng, 2);
    std::vector<pwleq::WindowPair> w(static_cast<std::size_t>(pick(rng, 1, 4)));
    for (auto& pair : w) {
      pair.window = oracle::random_matrix(rng, 81, 2);
      pair.target = oracle::random_matrix(rng, 61, 2, 0.9);
    }
    auto shuffled = w;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto acts = pwleq::ActivationSet::exact();
    const auto a = pwleq::evaluate(p, acts, w, 16), b = pwleq::evaluate(p, acts, shuffled, 16);
    r.check(a.bit_errors == b.bit_errors && a.n_bits == b.n_bits, [] { return std::string("differs"); });
  }
  return r.done();
}

inline Outcome cost_monotone(int cases, std::uint64_t seed) {
  Recorder r("pwl_cost monotone in segments");
  Rng rng(seed);
  for (int c = 0; c < cases; ++c, r.next_case()) {
    const int a = pick(rng, 2, 64), b = pick(rng, a, 65);
    const bool sa = pick(rng, 0, 1);
    const auto x = pwleq::pwl_cost(a, sa), y = pwleq::pwl_cost(b, sa);
    r.check(x.comparisons <= y.comparisons && x.multiplies <= y.multiplies && x.adds <= y.adds &&
                x.stored_coefficients <= y.stored_coefficients && x.lut_proxy() <= y.lut_proxy(),
            [&] { return std::to_string(a) + " vs " + std::to_string(b); });
    const auto n = pwleq::pwl_cost(a, false), s = pwleq::pwl_cost(a, true);
    r.check(s.comparisons <= n.comparisons && s.stored_coefficients <= n.stored_coefficients &&
                s.multiplies == 0,
            [&] { return "shift-add K=" + std::to_string(a); });
  }
  return r.done();
}

inline std::vector<std::function<Outcome(int, std::uint64_t)>> all_suites() {
  return {pwl_continuity,    pwl_symmetry,         pwl_monotone,          pwl_codomain,
          pwl_gradient,      fixed_point_bound,    conv_length,           lstm_unit_permutation,
          lstm_time_reversal, forward_determinism, window_arithmetic,     channel_identity,
          kerr_modulus,      dispersion_unit_energy, q_monotone,          q_inverse,
          evaluate_order_invariance, cost_monotone};
}

}  // namespace props

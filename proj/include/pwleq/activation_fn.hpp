// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "pwleq/activation.hpp"
#include "pwleq/fixed_point.hpp"

namespace pwleq {

/// Scalar activation used inside the network layers: either the exact
/// function, a floating-point PWL approximation, or a PWL evaluated through the
/// fixed-point datapath. Derivatives are always taken with respect to the
/// pre-activation input; the fixed-point variant back-propagates the
/// floating-point slope.
class ActivationFn {
 public:
  enum class Mode { Exact, Pwl, FixedPwl };

  static ActivationFn exact(ActivationKind kind);
  static ActivationFn pwl(PwlSpec spec);
  static ActivationFn pwl_fixed(PwlSpec spec, FixedFormat io_format, FixedFormat coeff_format);

  ActivationKind kind() const { return kind_; }
  Mode mode() const { return mode_; }
  bool is_pwl() const { return mode_ != Mode::Exact; }
  /// Only valid when is_pwl().
  const PwlSpec& spec() const;
  std::optional<FixedFormat> io_format() const;
  std::optional<FixedFormat> coeff_format() const;

  double forward(double x) const;
  double derivative(double x) const;
  /// Same as derivative(x) given y == forward(x); cheaper for exact functions.
  double derivative(double x, double y) const;
  /// True when x falls in a zero-slope segment (never for exact functions).
  bool in_flat_segment(double x) const;

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> apply(
      const Eigen::MatrixBase<Derived>& z) const {
    using Scalar = typename Derived::Scalar;
    if (mode_ == Mode::Exact) {
      if (kind_ == ActivationKind::Tanh) {
        // Eigen has no packet tanh for double; this form vectorizes through exp.
        const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> e = (Scalar(-2) * z.array().abs()).exp();
        const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> t = (Scalar(1) - e) / (Scalar(1) + e);
        return (z.array() < Scalar(0)).select(-t, t).matrix();
      }
      return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
    }
    return z.unaryExpr([this](Scalar v) { return static_cast<Scalar>(forward(static_cast<double>(v))); });
  }

  /// Elementwise derivative given pre-activations z and outputs y = apply(z).
  template <typename DerivedZ, typename DerivedY>
  Eigen::Matrix<typename DerivedZ::Scalar, Eigen::Dynamic, Eigen::Dynamic> derivative(
      const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedY>& y) const {
    using Scalar = typename DerivedZ::Scalar;
    if (mode_ == Mode::Exact) {
      if (kind_ == ActivationKind::Tanh) return (Scalar(1) - y.array().square()).matrix();
      return (y.array() * (Scalar(1) - y.array())).matrix();
    }
    return z.unaryExpr(
        [this](Scalar v) { return static_cast<Scalar>(derivative(static_cast<double>(v))); });
  }

  template <typename Derived>
  long count_flat(const Eigen::MatrixBase<Derived>& z) const {
    if (mode_ == Mode::Exact) return 0;
    long n = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      for (Eigen::Index i = 0; i < z.rows(); ++i) n += in_flat_segment(static_cast<double>(z(i, j)));
    return n;
  }

 private:
  ActivationFn(ActivationKind kind, Mode mode) : kind_(kind), mode_(mode) {}

  struct Fixed {
    FixedPwl table;
    FixedFormat io;
  };

  ActivationKind kind_;
  Mode mode_;
  std::shared_ptr<const PwlSpec> spec_;
  std::shared_ptr<const Fixed> fixed_;
};

}  // namespace pwleq

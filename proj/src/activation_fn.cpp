// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/activation_fn.hpp"

#include <stdexcept>
#include <utility>

#include "pwleq/errors.hpp"

namespace pwleq {

ActivationFn ActivationFn::exact(ActivationKind kind) { return ActivationFn(kind, Mode::Exact); }

ActivationFn ActivationFn::pwl(PwlSpec spec) {
  spec.validate();
  ActivationFn fn(spec.kind, Mode::Pwl);
  fn.spec_ = std::make_shared<const PwlSpec>(std::move(spec));
  return fn;
}

ActivationFn ActivationFn::pwl_fixed(PwlSpec spec, FixedFormat io_format, FixedFormat coeff_format) {
  ActivationFn fn = pwl(std::move(spec));
  fn.mode_ = Mode::FixedPwl;
  fn.fixed_ = std::make_shared<const Fixed>(
      Fixed{quantize_spec(*fn.spec_, io_format, coeff_format), io_format});
  return fn;
}

const PwlSpec& ActivationFn::spec() const {
  if (!spec_) throw UsageError("ActivationFn::spec() on an exact activation");
  return *spec_;
}

std::optional<FixedFormat> ActivationFn::io_format() const {
  if (!fixed_) return std::nullopt;
  return fixed_->io;
}

std::optional<FixedFormat> ActivationFn::coeff_format() const {
  if (!fixed_) return std::nullopt;
  return fixed_->table.coeff_format;
}

double ActivationFn::forward(double x) const {
  switch (mode_) {
    case Mode::Exact:
      return eval_exact(kind_, x);
    case Mode::Pwl:
      return eval_pwl(*spec_, x);
    case Mode::FixedPwl:
      return eval_pwl_fixed(fixed_->table, quantize(x, fixed_->io), fixed_->io).value();
  }
  return 0.0;
}

double ActivationFn::derivative(double x) const {
  if (mode_ == Mode::Exact) return grad_exact(kind_, x);
  return grad_pwl(*spec_, x);
}

double ActivationFn::derivative(double x, double y) const {
  if (mode_ == Mode::Exact) return kind_ == ActivationKind::Tanh ? 1.0 - y * y : y * (1.0 - y);
  return grad_pwl(*spec_, x);
}

bool ActivationFn::in_flat_segment(double x) const {
  if (mode_ == Mode::Exact) return false;
  return spec_->slopes[spec_->segment_of(x)] == 0.0;
}

}  // namespace pwleq

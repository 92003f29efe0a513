// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace pwleq {

/// Tensor shapes that do not line up.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when training diverges (non-finite loss or gradient) or collapses.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An API was called out of order, e.g. backward without a forward cache.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace pwleq

// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

// Arithmetic-primitive counts for a PWL activation unit, set next to the
// published FPGA resource figures. The model counts operations; it does not
// predict LUT or FF usage.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "pwleq/metrics.hpp"

namespace pwleq {

struct CostReport {
  std::string variant;
  int comparisons = 0;
  int multiplies = 0;
  int adds = 0;
  int stored_coefficients = 0;
  bool shift_add_mode = false;

  /// comparisons + adds + stored coefficients.
  int lut_proxy() const { return comparisons + adds + stored_coefficients; }
};

/// Sequential breakpoint compare, one multiply-add, 2K coefficients plus K-1
/// breakpoints. In shift-add mode the multiply becomes ceil(log2 K) extra adds.
CostReport pwl_cost(int segments, bool shift_add_mode = false);

/// Published Table 1 rows (DSP, LUT, FF) for the original tanh and 3/5/7/9 segments.
std::span<const PublishedReference::ResourceRow> reference_table();

/// CSV with header
/// `variant,dsp_published,lut_published,ff_published,comparisons_model,multiplies_model,adds_model,stored_model`:
/// one row for the original tanh, then one per segment count. Cells without a
/// value read `NA`.
std::string cost_report(std::span<const int> segments, bool shift_add_mode = false);

}  // namespace pwleq

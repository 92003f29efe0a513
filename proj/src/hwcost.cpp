// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include "pwleq/hwcost.hpp"

#include <bit>
#include <stdexcept>

namespace pwleq {

CostReport pwl_cost(int segments, bool shift_add_mode) {
  if (segments < 2) throw std::invalid_argument("pwl_cost: segments must be >= 2");
  CostReport r;
  r.variant = "pwl" + std::to_string(segments);
  r.shift_add_mode = shift_add_mode;
  r.comparisons = segments - 1;
  r.multiplies = shift_add_mode ? 0 : 1;
  r.adds = 1;
  if (shift_add_mode) {
    r.adds += std::bit_width(static_cast<unsigned>(segments - 1));  // ceil(log2 K)
  }
  r.stored_coefficients = 2 * segments + (segments - 1);
  return r;
}

std::span<const PublishedReference::ResourceRow> reference_table() { return PublishedReference::kResources; }

std::string cost_report(std::span<const int> segments, bool shift_add_mode) {
  std::string out =
      "variant,dsp_published,lut_published,ff_published,comparisons_model,multiplies_model,"
      "adds_model,stored_model\n";
  const auto published = [](int k) -> const PublishedReference::ResourceRow* {
    for (const auto& row : reference_table()) {
      if (row.segments == k) return &row;
    }
    return nullptr;
  };
  const auto* original = published(0);
  out += "original," + std::to_string(original->dsp) + "," + std::to_string(original->lut) + "," +
         std::to_string(original->ff) + ",NA,NA,NA,NA\n";
  for (int k : segments) {
    const auto model = pwl_cost(k, shift_add_mode);
    const auto* row = published(k);
    out += model.variant + ",";
    if (row) {
      out += std::to_string(row->dsp) + "," + std::to_string(row->lut) + "," +
             std::to_string(row->ff) + ",";
    } else {
      out += "NA,NA,NA,";
    }
    out += std::to_string(model.comparisons) + "," + std::to_string(model.multiplies) + "," +
           std::to_string(model.adds) + "," + std::to_string(model.stored_coefficients) + "\n";
  }
  return out;
}

}  // namespace pwleq

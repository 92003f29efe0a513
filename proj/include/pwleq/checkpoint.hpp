// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pwleq {

/// A named row-major tensor as stored in a checkpoint.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;

  bool operator==(const NamedTensor&) const = default;
};

inline constexpr char kCheckpointMagic[4] = {'P', 'W', 'L', 'Q'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic "PWLQ", u32 version, u32 tensor count, then per tensor
/// u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data. All
/// integers and doubles little-endian.
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

}  // namespace pwleq

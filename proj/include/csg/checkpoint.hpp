// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container: magic "CSGF", u32 format version, u32 record count,
// then one record per named tensor (u16 name length, UTF-8 name, u32 rank,
// u32 dims[rank], u8 dtype flag: 0 = f64 payload, 1 = f32 payload), and a
// trailing CRC32 of all preceding bytes. Everything is little-endian.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "csg/tensor.hpp"

namespace csg {

inline constexpr uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_checkpoint_records(const NamedTensors& records, const std::string& path);

// Raises csg::Error on bad magic, unsupported version, truncation, or
// checksum mismatch.
NamedTensors read_checkpoint_records(const std::string& path);

}  // namespace csg

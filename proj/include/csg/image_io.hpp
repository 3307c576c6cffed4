// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "csg/codec.hpp"
#include "csg/tensor.hpp"

namespace csg {

// Binary PPM (P6, 8-bit). Values are quantized with round(v * 255).
void save_ppm(const ImageTensor& img, const std::string& path);
ImageTensor load_ppm(const std::string& path);

// Binary PGM (P5, 8-bit) of one [H,W] plane. Signed data is mapped
// symmetrically around mid-gray: pixel = 128 + 127 * v / scale with
// scale = max(|v|) (or 1 when the plane is all zero).
void save_pgm_signed(const Tensor& plane, const std::string& path);

}  // namespace csg

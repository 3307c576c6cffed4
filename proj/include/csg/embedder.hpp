// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, differentiable feature extractors.
//
// content_features captures layout: grayscale, pooled to an 8x8 grid,
// mean-centered, unit-normalized. Mean-centering removes the global
// brightness component so that structurally unrelated images score near
// zero cosine instead of sharing a large positive DC term.
//
// style_features captures appearance: per-channel mean/std (6), the 3x3
// channel Gram matrix of mean-removed pixels (9), and an oriented energy
// histogram over the DoG high bands of the grayscale image plus the low
// residual energy (4 bands x 8 orientations + 1 = 33); 48 dims total,
// unit-normalized.
//
// Degenerate all-zero raw features fall back to a canonical basis vector so
// cosine similarity never sees a zero vector.

#pragma once

#include "csg/codec.hpp"
#include "csg/frequency.hpp"
#include "csg/tensor.hpp"

namespace csg {

inline constexpr int kContentFeatureDim = 64;
inline constexpr int kStyleFeatureDim = 48;

struct FeatureVector {
  Tensor values;        // unit-normalized
  double raw_norm = 0;  // norm of the raw feature before normalization
};

FeatureVector content_features(const ImageTensor& img);
FeatureVector style_features(const ImageTensor& img);

// Dot product of unit vectors; result in [-1,1] as a scalar tensor.
Tensor cosine_sim(const FeatureVector& a, const FeatureVector& b);

}  // namespace csg

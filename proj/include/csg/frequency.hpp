// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frequency-domain preprocessing and multi-scale decomposition.
//
// low_pass: per-channel 2-D DFT with a hard binary radial mask, normalized so
// the image-diagonal Nyquist maps to 1. The mask is an orthogonal projection,
// which makes the op exactly idempotent and self-adjoint (its backward pass
// is the projection itself).
//
// dog_decompose: difference-of-Gaussians cascade. With B_{-1} = z and
// B_k = blur(z, sigma_k), high_band[k] = B_{k-1} - B_k and the low residual
// is B_3, so the bands telescope back to the input exactly. Blurs are
// separable spatial convolutions, so gradients flow through the standard
// conv backward rule.

#pragma once

#include <vector>

#include "csg/codec.hpp"
#include "csg/tensor.hpp"

namespace csg {

struct FrequencyConfig {
  double tau = 0.2;                             // normalized cutoff, 1 = diagonal Nyquist
  std::vector<double> sigma_levels = {1, 2, 4, 8};
  int pyramid_levels = 4;

  void validate() const;
};

struct FrequencyPyramid {
  // high_bands[k] = B_{k-1} - B_k; low_levels[k] = B_k; low_residual = low_levels.back().
  std::vector<Tensor> high_bands;
  std::vector<Tensor> low_levels;
  Tensor low_residual;
};

// Normalized 1-D Gaussian taps, radius ceil(3*sigma); weights sum to 1.
std::vector<double> gaussian_kernel_1d(double sigma);

// Rank-3 building blocks (work on any [C,H,W] tensor).
Tensor low_pass_tensor(const Tensor& x, double tau);
Tensor gaussian_blur_tensor(const Tensor& x, double sigma);
FrequencyPyramid dog_decompose_tensor(const Tensor& x, const FrequencyConfig& cfg);

// Typed entry points.
ImageTensor low_pass(const ImageTensor& img, double tau);
LatentTensor gaussian_blur(const LatentTensor& z, double sigma);
FrequencyPyramid dog_decompose(const LatentTensor& z, const FrequencyConfig& cfg);

}  // namespace csg

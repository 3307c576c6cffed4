// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixed (non-learned) image/latent codec. Encoding is a 2x2 average pool per
// channel, decoding a bilinear 2x upsample followed by a straight-through
// clamp to [0,1]; both directions are differentiable so pixel-space losses
// can push gradients back into latent space.

#pragma once

#include "csg/tensor.hpp"

namespace csg {

// Pixel-space image: 3 channels, even spatial dims, values in [0,1].
class ImageTensor {
 public:
  explicit ImageTensor(Tensor t);
  static ImageTensor constant(int h, int w, double v);

  const Tensor& tensor() const { return t_; }
  int height() const { return t_.dim(1); }
  int width() const { return t_.dim(2); }

 private:
  Tensor t_;
};

// Latent-space code: 3 channels, half the image resolution, unbounded values.
class LatentTensor {
 public:
  explicit LatentTensor(Tensor t);
  const Tensor& tensor() const { return t_; }
  int height() const { return t_.dim(1); }
  int width() const { return t_.dim(2); }

 private:
  Tensor t_;
};

LatentTensor encode(const ImageTensor& img);
ImageTensor decode(const LatentTensor& z);

}  // namespace csg

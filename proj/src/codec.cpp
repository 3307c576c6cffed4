// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/codec.hpp"

#include "csg/error.hpp"

namespace csg {

ImageTensor::ImageTensor(Tensor t) {
  check(t.defined() && t.rank() == 3 && t.dim(0) == 3,
        "image: expected shape [3,H,W], got " + shape_str(t.shape()));
  check(t.dim(1) % 2 == 0 && t.dim(2) % 2 == 0,
        "image: spatial dims must be even, got " + shape_str(t.shape()));
  bool in_range = true;
  for (double v : t.data()) {
    if (v < 0.0 || v > 1.0) {
      in_range = false;
      break;
    }
  }
  // Clamp on construction; skipped when already in range so tracked tensors
  // pass through without an extra tape node.
  t_ = in_range ? std::move(t) : clamp01_straight_through(t);
}

ImageTensor ImageTensor::constant(int h, int w, double v) {
  return ImageTensor(Tensor::full({3, h, w}, v));
}

LatentTensor::LatentTensor(Tensor t) {
  check(t.defined() && t.rank() == 3 && t.dim(0) == 3,
        "latent: expected shape [3,h,w], got " + shape_str(t.shape()));
  t_ = std::move(t);
}

LatentTensor encode(const ImageTensor& img) {
  return LatentTensor(avg_pool2x2(img.tensor()));
}

ImageTensor decode(const LatentTensor& z) {
  return ImageTensor(clamp01_straight_through(upsample_bilinear2x(z.tensor())));
}

}  // namespace csg

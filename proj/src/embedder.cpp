// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/embedder.hpp"

#include <cmath>

#include "csg/error.hpp"

namespace csg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = 1e-12;

// Relative weights of the style blocks before normalization. Means/stds sit
// in [0,1] while Gram entries and band energies are much smaller; these
// factors keep each block visible in the unit-normalized vector. Energies
// stay linear (no sqrt) so the whole feature map is polynomial and benign
// under finite differences.
constexpr double kGramScale = 4.0;
constexpr double kEnergyScale = 120.0;
constexpr double kResidualScale = 1.0;

Tensor grayscale(const Tensor& img) {
  Tensor r = slice_channels(img, 0, 1);
  Tensor g = slice_channels(img, 1, 2);
  Tensor b = slice_channels(img, 2, 3);
  return mul_scalar(add(add(r, g), b), 1.0 / 3.0);
}

Tensor pool_to_8(Tensor x) {
  check(x.dim(1) == x.dim(2), "content_features: image must be square, got shape " +
                                  shape_str(x.shape()));
  while (x.dim(1) > 8) {
    check(x.dim(1) % 2 == 0, "content_features: spatial dims must be 8 * 2^k, got " +
                                 std::to_string(x.dim(1)));
    x = avg_pool2x2(x);
  }
  check(x.dim(1) == 8, "content_features: spatial dims must be >= 8, got " +
                           std::to_string(x.dim(1)));
  return x;
}

// Unit-normalizes a raw feature vector. Effectively-zero features (norm
// below 1e-5, e.g. an all-black image whose only signal is the variance
// epsilon floor) map to the canonical basis vector e0 instead.
FeatureVector normalize_feature(const Tensor& raw) {
  double sq = 0;
  for (double v : raw.data()) sq += v * v;
  if (sq < 1e-10) {
    std::vector<double> basis(static_cast<size_t>(raw.size()), 0.0);
    basis[0] = 1.0;
    return FeatureVector{Tensor::from_data(raw.shape(), std::move(basis)), 0.0};
  }
  Tensor norm = sqrt(sum(square(raw)));
  return FeatureVector{div_s(raw, norm), std::sqrt(sq)};
}

Tensor sobel_x() {
  return Tensor::from_data({3, 3}, {-0.25, 0, 0.25, -0.5, 0, 0.5, -0.25, 0, 0.25});
}

Tensor sobel_y() {
  return Tensor::from_data({3, 3}, {-0.25, -0.5, -0.25, 0, 0, 0, 0.25, 0.5, 0.25});
}

}  // namespace

FeatureVector content_features(const ImageTensor& img) {
  Tensor grid = pool_to_8(grayscale(img.tensor()));
  Tensor flat = reshape(grid, {kContentFeatureDim});
  Tensor centered = sub_s(flat, mean(flat));
  return normalize_feature(centered);
}

FeatureVector style_features(const ImageTensor& img) {
  const Tensor& x = img.tensor();

  std::vector<Tensor> parts;
  parts.reserve(48);

  // (a) per-channel mean and std
  std::vector<Tensor> centered;
  std::vector<Tensor> means;
  for (int c = 0; c < 3; ++c) {
    Tensor chan = slice_channels(x, c, c + 1);
    Tensor m = mean(chan);
    means.push_back(m);
    centered.push_back(sub_s(chan, m));
  }
  for (int c = 0; c < 3; ++c) parts.push_back(means[static_cast<size_t>(c)]);
  for (int c = 0; c < 3; ++c) {
    Tensor var = mean(square(centered[static_cast<size_t>(c)]));
    parts.push_back(sqrt(add_scalar(var, kEps)));
  }

  // (b) 3x3 channel Gram matrix of mean-removed pixels
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Tensor g = mean(mul(centered[static_cast<size_t>(a)], centered[static_cast<size_t>(b)]));
      parts.push_back(mul_scalar(g, kGramScale));
    }

  // (c) oriented high-band energies over the DoG pyramid of the grayscale
  Tensor gray = grayscale(x);
  FrequencyConfig fcfg;
  FrequencyPyramid pyr = dog_decompose_tensor(gray, fcfg);
  Tensor kx = sobel_x();
  Tensor ky = sobel_y();
  for (const Tensor& band : pyr.high_bands) {
    Tensor rx = depthwise_conv2d(band, kx, 1, 1);
    Tensor ry = depthwise_conv2d(band, ky, 1, 1);
    for (int j = 0; j < 8; ++j) {
      double theta = j * kPi / 8.0;
      Tensor steered = add(mul_scalar(rx, std::cos(theta)), mul_scalar(ry, std::sin(theta)));
      parts.push_back(mul_scalar(mean(square(steered)), kEnergyScale));
    }
  }
  parts.push_back(mul_scalar(mean(square(pyr.low_residual)), kResidualScale));

  Tensor raw = stack_scalars(parts);
  check(raw.dim(0) == kStyleFeatureDim, "style_features: internal dimension mismatch");
  return normalize_feature(raw);
}

Tensor cosine_sim(const FeatureVector& a, const FeatureVector& b) {
  check(a.values.shape() == b.values.shape(),
        "cosine_sim: dimension mismatch " + shape_str(a.values.shape()) + " vs " +
            shape_str(b.values.shape()));
  return sum(mul(a.values, b.values));
}

}  // namespace csg

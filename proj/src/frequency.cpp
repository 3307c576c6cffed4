// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/frequency.hpp"

#include <cmath>
#include <complex>

#include "csg/error.hpp"

namespace csg {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cd = std::complex<double>;

// Naive separable DFT; O(H*W*(H+W)), plenty for desk-scale images.
void dft_2d(std::vector<cd>& a, int h, int w, bool inverse) {
  double sign = inverse ? 1.0 : -1.0;
  std::vector<cd> tmp(static_cast<size_t>(std::max(h, w)));
  for (int y = 0; y < h; ++y) {
    for (int u = 0; u < w; ++u) {
      cd acc = 0;
      for (int x = 0; x < w; ++x)
        acc += a[static_cast<size_t>(y) * w + x] * std::polar(1.0, sign * 2.0 * kPi * u * x / w);
      tmp[static_cast<size_t>(u)] = acc;
    }
    for (int u = 0; u < w; ++u) a[static_cast<size_t>(y) * w + u] = tmp[static_cast<size_t>(u)];
  }
  for (int x = 0; x < w; ++x) {
    for (int v = 0; v < h; ++v) {
      cd acc = 0;
      for (int y = 0; y < h; ++y)
        acc += a[static_cast<size_t>(y) * w + x] * std::polar(1.0, sign * 2.0 * kPi * v * y / h);
      tmp[static_cast<size_t>(v)] = acc;
    }
    for (int v = 0; v < h; ++v) a[static_cast<size_t>(v) * w + x] = tmp[static_cast<size_t>(v)];
  }
  if (inverse) {
    double inv = 1.0 / (static_cast<double>(h) * w);
    for (cd& c : a) c *= inv;
  }
}

// Applies the radial projection to raw [C,H,W] values.
std::vector<double> apply_low_pass(const std::vector<double>& data, int c, int h, int w,
                                   double tau) {
  std::vector<char> keep(static_cast<size_t>(h) * w);
  double fy_nyq = h / 2.0, fx_nyq = w / 2.0;
  for (int v = 0; v < h; ++v) {
    int fy = v <= h / 2 ? v : v - h;
    for (int u = 0; u < w; ++u) {
      int fx = u <= w / 2 ? u : u - w;
      double ry = fy / fy_nyq, rx = fx / fx_nyq;
      double r = std::sqrt((rx * rx + ry * ry) / 2.0);
      keep[static_cast<size_t>(v) * w + u] = r <= tau ? 1 : 0;
    }
  }

  std::vector<double> out(data.size());
  std::vector<cd> plane(static_cast<size_t>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    size_t base = static_cast<size_t>(ci) * h * w;
    for (size_t i = 0; i < plane.size(); ++i) plane[i] = data[base + i];
    dft_2d(plane, h, w, false);
    for (size_t i = 0; i < plane.size(); ++i) {
      if (!keep[i]) plane[i] = 0;
    }
    dft_2d(plane, h, w, true);
    for (size_t i = 0; i < plane.size(); ++i) {
      check(std::abs(plane[i].imag()) < 1e-10, "low_pass: imaginary residue exceeds 1e-10");
      out[base + i] = plane[i].real();
    }
  }
  return out;
}

}  // namespace

void FrequencyConfig::validate() const {
  check(tau > 0.0 && tau <= 1.0, "frequency: tau must lie in (0,1]");
  check(pyramid_levels > 0, "frequency: pyramid_levels must be positive");
  check(static_cast<int>(sigma_levels.size()) == pyramid_levels,
        "frequency: sigma_levels count does not match pyramid_levels");
  for (size_t i = 0; i < sigma_levels.size(); ++i) {
    check(sigma_levels[i] > 0.0, "frequency: sigma must be positive");
    if (i > 0)
      check(sigma_levels[i] > sigma_levels[i - 1],
            "frequency: sigma_levels must be strictly increasing");
  }
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  check(sigma > 0.0, "gaussian_blur: sigma must be positive");
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

Tensor low_pass_tensor(const Tensor& x, double tau) {
  check(x.rank() == 3, "low_pass: expected rank-3 input, got shape " + shape_str(x.shape()));
  check(tau > 0.0 && tau <= 1.0, "low_pass: tau must lie in (0,1]");
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor r = Tensor::from_data(x.shape(), apply_low_pass(x.data(), c, h, w, tau), x.dtype());

  // The hard-mask projection is symmetric and idempotent, so the backward
  // pass applies the same projection to the incoming gradient.
  int nx = x.node();
  return record_op(std::move(r), x.tracked(),
                   [nx, c, h, w, tau](const std::vector<double>& g, Tape& tape) {
                     std::vector<double> gp = apply_low_pass(g, c, h, w, tau);
                     auto& gx = tape.grad_buf(nx);
                     for (size_t i = 0; i < gp.size(); ++i) gx[i] += gp[i];
                   });
}

Tensor gaussian_blur_tensor(const Tensor& x, double sigma) {
  check(x.rank() == 3, "gaussian_blur: expected rank-3 input, got shape " + shape_str(x.shape()));
  auto k = gaussian_kernel_1d(sigma);
  int radius = (static_cast<int>(k.size()) - 1) / 2;
  Tensor kx = Tensor::from_data({1, static_cast<int>(k.size())}, k);
  Tensor ky = Tensor::from_data({static_cast<int>(k.size()), 1}, k);
  Tensor hpass = depthwise_conv2d(x, kx, 0, radius);
  return depthwise_conv2d(hpass, ky, radius, 0);
}

FrequencyPyramid dog_decompose_tensor(const Tensor& x, const FrequencyConfig& cfg) {
  cfg.validate();
  FrequencyPyramid pyr;
  Tensor prev = x;
  for (double sigma : cfg.sigma_levels) {
    Tensor blurred = gaussian_blur_tensor(x, sigma);
    pyr.high_bands.push_back(sub(prev, blurred));
    pyr.low_levels.push_back(blurred);
    prev = blurred;
  }
  pyr.low_residual = pyr.low_levels.back();
  return pyr;
}

ImageTensor low_pass(const ImageTensor& img, double tau) {
  return ImageTensor(low_pass_tensor(img.tensor(), tau));
}

LatentTensor gaussian_blur(const LatentTensor& z, double sigma) {
  return LatentTensor(gaussian_blur_tensor(z.tensor(), sigma));
}

FrequencyPyramid dog_decompose(const LatentTensor& z, const FrequencyConfig& cfg) {
  return dog_decompose_tensor(z.tensor(), cfg);
}

}  // namespace csg

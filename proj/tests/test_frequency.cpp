// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>

#include "doctest.h"

#include "csg/error.hpp"
#include "csg/frequency.hpp"
#include "csg/gradcheck.hpp"
#include "csg/rng.hpp"

using namespace csg;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor::from_data(std::move(shape), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

double l2_norm(const Tensor& a) {
  double s = 0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

// Direct full DFT used as an independent oracle (no row/column splitting).
std::complex<double> dft_coeff(const std::vector<double>& plane, int h, int w, int fy, int fx) {
  std::complex<double> acc = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double phase = -2.0 * 3.14159265358979323846 *
                     (static_cast<double>(fy) * y / h + static_cast<double>(fx) * x / w);
      acc += plane[static_cast<size_t>(y) * w + x] * std::polar(1.0, phase);
    }
  return acc;
}

// Direct dense convolution with a normalized separable Gaussian, zero pad.
std::vector<double> direct_blur(const std::vector<double>& plane, int h, int w, double sigma) {
  auto k = gaussian_kernel_1d(sigma);
  int radius = (static_cast<int>(k.size()) - 1) / 2;
  std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int u = -radius; u <= radius; ++u)
        for (int v = -radius; v <= radius; ++v) {
          int yy = y + u, xx = x + v;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          acc += plane[static_cast<size_t>(yy) * w + xx] * k[static_cast<size_t>(u + radius)] *
                 k[static_cast<size_t>(v + radius)];
        }
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("low_pass with tau=1 is the identity") {
  Rng rng(1);
  Tensor x = rand_tensor({3, 8, 8}, rng);
  CHECK(max_abs_diff(low_pass_tensor(x, 1.0), x) < 1e-9);
}

TEST_CASE("low_pass leaves constant images unchanged for any tau") {
  Tensor c = Tensor::full({3, 8, 8}, 0.4);
  for (double tau : {0.05, 0.2, 0.7}) {
    CHECK(max_abs_diff(low_pass_tensor(c, tau), c) < 1e-10);
  }
}

TEST_CASE("pure Nyquist checkerboard is annihilated at tau=0.2") {
  int n = 8;
  std::vector<double> data(static_cast<size_t>(3 * n * n));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        data[(static_cast<size_t>(c) * n + y) * n + x] = ((x + y) % 2 == 0) ? 1.0 : -1.0;
  Tensor cb = Tensor::from_data({3, n, n}, data);

  // Oracle check first: the checkerboard's spectrum is a single coefficient
  // at the (Nyquist, Nyquist) bin and zero elsewhere (including DC).
  std::vector<double> plane(data.begin(), data.begin() + n * n);
  CHECK(std::abs(dft_coeff(plane, n, n, 0, 0)) < 1e-9);
  CHECK(std::abs(dft_coeff(plane, n, n, n / 2, n / 2)) ==
        doctest::Approx(static_cast<double>(n * n)).epsilon(1e-12));
  CHECK(std::abs(dft_coeff(plane, n, n, 1, 2)) < 1e-9);

  Tensor out = low_pass_tensor(cb, 0.2);
  CHECK(max_abs_diff(out, Tensor::zeros({3, n, n})) < 1e-9);
}

TEST_CASE("low_pass rejects non-positive tau") {
  Tensor x = Tensor::zeros({3, 4, 4});
  CHECK_THROWS_AS(low_pass_tensor(x, 0.0), Error);
  CHECK_THROWS_AS(low_pass_tensor(x, -0.3), Error);
}

TEST_CASE("low_pass is idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = rand_tensor({3, 16, 16}, rng);
    for (double tau : {0.2, 0.5}) {
      Tensor once = low_pass_tensor(x, tau);
      Tensor twice = low_pass_tensor(once, tau);
      CHECK(max_abs_diff(once, twice) < 1e-9);
    }
  }
}

TEST_CASE("low_pass energy is monotone in tau") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = rand_tensor({3, 16, 16}, rng);
    double prev = 0;
    for (double tau : {0.1, 0.3, 0.5, 0.8, 1.0}) {
      double e = l2_norm(low_pass_tensor(x, tau));
      CHECK(e >= prev - 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("gaussian kernels are normalized") {
  for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
    auto k = gaussian_kernel_1d(sigma);
    CHECK(static_cast<int>(k.size()) == 2 * static_cast<int>(std::ceil(3 * sigma)) + 1);
    double total = 0;
    for (double v : k) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("gaussian blur keeps constant interiors, shrinks zero-padded edges") {
  Tensor c = Tensor::full({1, 17, 17}, 1.0);
  Tensor b = gaussian_blur_tensor(c, 1.0);  // radius 3
  // interior pixel (8,8): full kernel support
  CHECK(b.at(8 * 17 + 8) == doctest::Approx(1.0).epsilon(1e-12));
  // corner pixel: missing mass under zero padding
  CHECK(b.at(0) < 1.0 - 1e-3);
}

TEST_CASE("gaussian blur rejects non-positive sigma") {
  Tensor x = Tensor::zeros({1, 4, 4});
  CHECK_THROWS_AS(gaussian_blur_tensor(x, 0.0), Error);
  CHECK_THROWS_AS(gaussian_kernel_1d(-1.0), Error);
}

TEST_CASE("impulse response matches the pointwise Gaussian formula") {
  std::vector<double> data(17 * 17, 0.0);
  data[8 * 17 + 8] = 1.0;
  Tensor x = Tensor::from_data({1, 17, 17}, data);
  Tensor b = gaussian_blur_tensor(x, 1.0);

  auto k = gaussian_kernel_1d(1.0);
  int radius = 3;
  for (int y = 0; y < 17; ++y)
    for (int xx = 0; xx < 17; ++xx) {
      int dy = y - 8, dx = xx - 8;
      double expect = 0;
      if (std::abs(dy) <= radius && std::abs(dx) <= radius)
        expect = k[static_cast<size_t>(dy + radius)] * k[static_cast<size_t>(dx + radius)];
      CHECK(std::abs(b.at(y * 17 + xx) - expect) < 1e-9);
    }
}

TEST_CASE("blur agrees with the direct dense convolution oracle") {
  Rng rng(3);
  Tensor x = rand_tensor({1, 8, 8}, rng);
  for (double sigma : {1.0, 2.0}) {
    Tensor b = gaussian_blur_tensor(x, sigma);
    auto expect = direct_blur(x.data(), 8, 8, sigma);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(b.at(i) - expect[static_cast<size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("dog pyramid of a constant is flat") {
  FrequencyConfig cfg;
  Tensor c = Tensor::full({3, 32, 32}, 0.6);
  FrequencyPyramid pyr = dog_decompose_tensor(c, cfg);
  REQUIRE(pyr.high_bands.size() == 4);
  // Interior of band 0 (sigma=1, radius 3): away from edges the blur is
  // exact, so the band vanishes there.
  const Tensor& band0 = pyr.high_bands[0];
  for (int y = 8; y < 24; ++y)
    for (int x = 8; x < 24; ++x)
      CHECK(std::abs(band0.at((0 * 32 + y) * 32 + x)) < 1e-12);
  // Residual keeps the DC level in the deep interior only to blur accuracy;
  // check the exact telescoping identity instead of interior values.
  Tensor sum_bands = pyr.low_residual;
  for (const Tensor& b : pyr.high_bands) sum_bands = add(sum_bands, b);
  CHECK(max_abs_diff(sum_bands, c) < 1e-9);
}

TEST_CASE("dog pyramid telescopes back to the input") {
  Rng rng(21);
  FrequencyConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    Tensor z = rand_tensor({3, 8, 8}, rng, -2.0, 2.0);
    FrequencyPyramid pyr = dog_decompose_tensor(z, cfg);
    Tensor total = pyr.low_residual;
    for (const Tensor& b : pyr.high_bands) total = add(total, b);
    CHECK(max_abs_diff(total, z) < 1e-9);
    CHECK(max_abs_diff(pyr.low_residual, pyr.low_levels.back()) == 0.0);
  }
}

TEST_CASE("period-2 stripes concentrate energy in the first band") {
  FrequencyConfig cfg;
  // Zero-mean stripes isolate the oscillation from the DC component, which
  // under zero padding would otherwise leak shrink energy into every band.
  std::vector<double> data(16 * 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) data[static_cast<size_t>(y) * 16 + x] = (y % 2) ? 0.3 : -0.3;
  Tensor stripes = Tensor::from_data({1, 16, 16}, data);
  FrequencyPyramid pyr = dog_decompose_tensor(stripes, cfg);

  std::vector<double> energies;
  for (const Tensor& b : pyr.high_bands) {
    double e = 0;
    for (double v : b.data()) e += v * v;
    energies.push_back(e);
  }
  CHECK(energies[0] > 10.0 * energies[1]);
  CHECK(energies[0] > 10.0 * energies[2]);
  CHECK(energies[0] > 10.0 * energies[3]);

  // Verify band 0 against the direct convolution oracle: z - blur(z, 1).
  auto blurred = direct_blur(data, 16, 16, 1.0);
  for (int i = 0; i < 256; ++i)
    CHECK(std::abs(pyr.high_bands[0].at(i) - (data[static_cast<size_t>(i)] - blurred[static_cast<size_t>(i)])) <
          1e-12);
}

TEST_CASE("dog decomposition is linear bandwise") {
  Rng rng(31);
  FrequencyConfig cfg;
  Tensor x = rand_tensor({1, 8, 8}, rng);
  Tensor y = rand_tensor({1, 8, 8}, rng);
  double a = 0.7, b = -1.3;
  FrequencyPyramid px = dog_decompose_tensor(x, cfg);
  FrequencyPyramid py = dog_decompose_tensor(y, cfg);
  FrequencyPyramid pxy = dog_decompose_tensor(add(mul_scalar(x, a), mul_scalar(y, b)), cfg);
  for (size_t k = 0; k < 4; ++k) {
    Tensor combo = add(mul_scalar(px.high_bands[k], a), mul_scalar(py.high_bands[k], b));
    CHECK(max_abs_diff(combo, pxy.high_bands[k]) < 1e-12);
  }
  Tensor combo_low = add(mul_scalar(px.low_residual, a), mul_scalar(py.low_residual, b));
  CHECK(max_abs_diff(combo_low, pxy.low_residual) < 1e-12);
}

TEST_CASE("frequency ops pass grad_check") {
  Rng rng(41);
  FrequencyConfig cfg;
  Tensor x = rand_tensor({1, 6, 6}, rng);
  CHECK(grad_check([](const Tensor& t) { return sum(square(low_pass_tensor(t, 0.3))); }, x) <
        1e-5);
  CHECK(grad_check([](const Tensor& t) { return sum(square(gaussian_blur_tensor(t, 2.0))); },
                   x) < 1e-5);
  CHECK(grad_check(
            [&cfg](const Tensor& t) {
              FrequencyPyramid p = dog_decompose_tensor(t, cfg);
              Tensor acc = sum(square(p.low_residual));
              for (const Tensor& band : p.high_bands) acc = add(acc, sum(square(band)));
              return acc;
            },
            x) < 1e-5);
}

TEST_CASE("frequency config validation") {
  FrequencyConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = FrequencyConfig{};
  bad.sigma_levels = {1, 2, 2, 4};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = FrequencyConfig{};
  bad.pyramid_levels = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
}

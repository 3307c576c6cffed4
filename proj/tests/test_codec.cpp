// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "csg/codec.hpp"
#include "csg/error.hpp"
#include "csg/gradcheck.hpp"
#include "csg/rng.hpp"

using namespace csg;

namespace {

Tensor rand_image_tensor(int h, int w, Rng& rng) {
  std::vector<double> data(static_cast<size_t>(3 * h * w));
  for (double& v : data) v = rng.uniform();
  return Tensor::from_data({3, h, w}, std::move(data));
}

}  // namespace

TEST_CASE("encode of a constant image is the constant latent") {
  LatentTensor z = encode(ImageTensor::constant(8, 8, 0.5));
  REQUIRE(z.tensor().shape() == Shape{3, 4, 4});
  for (int i = 0; i < 48; ++i) CHECK(z.tensor().at(i) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("encode averages each 2x2 block") {
  // One channel pattern [0,0;1,1] pools to 0.5.
  std::vector<double> data(3 * 2 * 2, 0.0);
  for (int c = 0; c < 3; ++c) {
    data[static_cast<size_t>(c) * 4 + 2] = 1.0;
    data[static_cast<size_t>(c) * 4 + 3] = 1.0;
  }
  LatentTensor z = encode(ImageTensor(Tensor::from_data({3, 2, 2}, data)));
  REQUIRE(z.tensor().size() == 3);
  for (int c = 0; c < 3; ++c) CHECK(z.tensor().at(c) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("encode equals the brute-force block-mean oracle") {
  Rng rng(99);
  Tensor img = rand_image_tensor(16, 16, rng);
  LatentTensor z = encode(ImageTensor(img));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        double expect = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            expect += img.at((c * 16 + 2 * i + dy) * 16 + 2 * j + dx);
        expect *= 0.25;
        CHECK(z.tensor().at((c * 8 + i) * 8 + j) == doctest::Approx(expect).epsilon(1e-14));
      }
}

TEST_CASE("decode of a constant latent is the constant image") {
  LatentTensor z(Tensor::full({3, 4, 4}, 0.25));
  ImageTensor img = decode(z);
  REQUIRE(img.tensor().shape() == Shape{3, 8, 8});
  for (int i = 0; i < 192; ++i) CHECK(img.tensor().at(i) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("decode(encode(.)) is the identity on constants") {
  ImageTensor img = ImageTensor::constant(16, 16, 0.7);
  ImageTensor round = decode(encode(img));
  for (int i = 0; i < 3 * 256; ++i)
    CHECK(round.tensor().at(i) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("encode-decode-encode equals encode on constants exactly") {
  ImageTensor img = ImageTensor::constant(16, 16, 0.3);
  LatentTensor once = encode(img);
  LatentTensor twice = encode(decode(once));
  for (int i = 0; i < once.tensor().size(); ++i)
    CHECK(once.tensor().at(i) == twice.tensor().at(i));
}

TEST_CASE("decode(encode(ramp)) mean absolute error is below 0.02") {
  // Smooth left-to-right ramp.
  std::vector<double> data(3 * 16 * 16);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        data[(static_cast<size_t>(c) * 16 + y) * 16 + x] = x / 15.0;
  ImageTensor ramp(Tensor::from_data({3, 16, 16}, data));
  ImageTensor round = decode(encode(ramp));
  double mae = 0;
  for (int i = 0; i < 3 * 256; ++i) mae += std::abs(round.tensor().at(i) - ramp.tensor().at(i));
  mae /= 3 * 256;
  CHECK(mae < 0.02);
}

TEST_CASE("decode output always lies in [0,1]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> data(3 * 16);
    for (double& v : data) v = -3.0 + 6.0 * rng.uniform();
    ImageTensor img = decode(LatentTensor(Tensor::from_data({3, 4, 4}, data)));
    for (int i = 0; i < img.tensor().size(); ++i) {
      CHECK(img.tensor().at(i) >= 0.0);
      CHECK(img.tensor().at(i) <= 1.0);
    }
  }
}

TEST_CASE("images reject odd spatial dims and wrong channel counts") {
  CHECK_THROWS_AS(ImageTensor(Tensor::zeros({3, 5, 6})), Error);
  CHECK_THROWS_AS(ImageTensor(Tensor::zeros({1, 4, 4})), Error);
  CHECK_THROWS_AS(LatentTensor(Tensor::zeros({2, 4, 4})), Error);
}

TEST_CASE("image construction clamps out-of-range values") {
  Tensor raw = Tensor::from_data({3, 2, 2}, {-0.5, 0.2, 1.7, 0.9, 0.1, 0.2, 0.3, 0.4,
                                             0.5, 0.6, 0.7, 2.0});
  ImageTensor img(raw);
  CHECK(img.tensor().at(0) == 0.0);
  CHECK(img.tensor().at(2) == 1.0);
  CHECK(img.tensor().at(11) == 1.0);
  CHECK(img.tensor().at(1) == 0.2);
}

TEST_CASE("decode is differentiable through the straight-through clamp") {
  Rng rng(42);
  std::vector<double> data(3 * 16);
  for (double& v : data) v = 0.2 + 0.6 * rng.uniform();
  Tensor z = Tensor::from_data({3, 4, 4}, data);
  auto f = [](const Tensor& zz) { return mean(square(decode(LatentTensor(zz)).tensor())); };
  CHECK(grad_check(f, z, 1e-6) < 1e-7);
}

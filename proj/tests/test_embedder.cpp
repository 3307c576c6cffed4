// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "csg/embedder.hpp"
#include "csg/error.hpp"
#include "csg/gradcheck.hpp"
#include "csg/rng.hpp"
#include "csg/synth_data.hpp"

using namespace csg;

namespace {

ImageTensor rand_image(Rng& rng, int size = 16) {
  std::vector<double> data(static_cast<size_t>(3 * size * size));
  for (double& v : data) v = rng.uniform();
  return ImageTensor(Tensor::from_data({3, size, size}, std::move(data)));
}

}  // namespace

TEST_CASE("feature vectors are unit-normalized with the advertised dims") {
  Rng rng(1);
  ImageTensor img = rand_image(rng);
  FeatureVector c = content_features(img);
  FeatureVector s = style_features(img);
  REQUIRE(c.values.shape() == Shape{kContentFeatureDim});
  REQUIRE(s.values.shape() == Shape{kStyleFeatureDim});
  double cn = 0, sn = 0;
  for (double v : c.values.data()) cn += v * v;
  for (double v : s.values.data()) sn += v * v;
  CHECK(std::abs(std::sqrt(cn) - 1.0) < 1e-9);
  CHECK(std::abs(std::sqrt(sn) - 1.0) < 1e-9);
  CHECK(c.raw_norm > 0);
  CHECK(s.raw_norm > 0);
}

TEST_CASE("identical images have cosine similarity one") {
  ImageTensor img = gen_content(5, 16);
  CHECK(cosine_sim(content_features(img), content_features(img)).value() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_sim(style_features(img), style_features(img)).value() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cosine similarity basics") {
  FeatureVector a{Tensor::from_data({3}, {1, 0, 0}), 1.0};
  FeatureVector b{Tensor::from_data({3}, {0, 1, 0}), 1.0};
  FeatureVector na{Tensor::from_data({3}, {-1, 0, 0}), 1.0};
  CHECK(cosine_sim(a, a).value() == 1.0);
  CHECK(cosine_sim(a, b).value() == 0.0);
  CHECK(cosine_sim(a, na).value() == -1.0);
  FeatureVector wrong{Tensor::from_data({2}, {1, 0}), 1.0};
  CHECK_THROWS_AS(cosine_sim(a, wrong), Error);
}

TEST_CASE("content features survive palette remaps") {
  StyleTransform st = StyleTransform::from_id(0);  // palette remap
  double worst = 1.0;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    ImageTensor img = gen_content(seed, 16);
    double cos = cosine_sim(content_features(img), content_features(apply_style(st, img))).value();
    worst = std::min(worst, cos);
  }
  CHECK(worst >= 0.95);
}

TEST_CASE("content features separate structure from noise") {
  Rng rng(77);
  double acc = 0;
  for (int i = 0; i < 100; ++i) {
    ImageTensor img = gen_content(static_cast<uint64_t>(1000 + i), 16);
    ImageTensor noise = rand_image(rng);
    acc += cosine_sim(content_features(img), content_features(noise)).value();
  }
  CHECK(acc / 100.0 < 0.5);
}

TEST_CASE("style features of a shared transform agree across contents") {
  // Same palette remap applied to two different contents.
  StyleTransform st = StyleTransform::from_id(0);
  double acc = 0;
  int n = 0;
  for (uint64_t seed = 0; seed < 30; seed += 2) {
    ImageTensor a = apply_style(st, gen_content(seed, 16));
    ImageTensor b = apply_style(st, gen_content(seed + 1, 16));
    acc += cosine_sim(style_features(a), style_features(b)).value();
    ++n;
  }
  CHECK(acc / n >= 0.9);
}

TEST_CASE("same style beats same content in style-feature space") {
  // For a styled image, style similarity to its reference (same style,
  // different content) should exceed style similarity to its own clean
  // source (same content, different style), on average.
  DatasetConfig cfg;
  cfg.n = 100;
  cfg.num_styles = 4;
  cfg.seed = 9;
  auto tuples = gen_dataset(cfg);
  double same_style = 0, same_content = 0;
  for (const FourTuple& t : tuples) {
    same_style += cosine_sim(style_features(t.img_gt), style_features(t.img_ref)).value();
    same_content += cosine_sim(style_features(t.img_gt), style_features(t.img_source)).value();
  }
  CHECK(same_style > same_content);
}

TEST_CASE("style transform pairs score higher on style than content features") {
  // Two different contents under one transform: style cosine should exceed
  // content cosine for those image pairs.
  int wins = 0, total = 0;
  for (int id = 0; id < 4; ++id) {
    StyleTransform st = StyleTransform::from_id(id);
    for (uint64_t seed = 40; seed < 48; seed += 2) {
      ImageTensor a = apply_style(st, gen_content(seed, 16));
      ImageTensor b = apply_style(st, gen_content(seed + 1, 16));
      double sf = cosine_sim(style_features(a), style_features(b)).value();
      double cf = cosine_sim(content_features(a), content_features(b)).value();
      wins += sf > cf ? 1 : 0;
      ++total;
    }
  }
  CHECK(wins > total * 3 / 4);
}

TEST_CASE("constant gray image: gram block zero, no error, unit output") {
  ImageTensor gray = ImageTensor::constant(16, 16, 0.5);
  FeatureVector f = style_features(gray);
  // Gram entries occupy dims [6, 15).
  for (int i = 6; i < 15; ++i) CHECK(std::abs(f.values.at(i)) < 1e-9);
  double n = 0;
  for (double v : f.values.data()) n += v * v;
  CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
}

TEST_CASE("all-black image falls back to the canonical basis vector") {
  ImageTensor black = ImageTensor::constant(16, 16, 0.0);
  FeatureVector c = content_features(black);
  FeatureVector s = style_features(black);
  CHECK(c.raw_norm == 0.0);
  CHECK(s.raw_norm == 0.0);
  CHECK(c.values.at(0) == 1.0);
  CHECK(s.values.at(0) == 1.0);
  for (int i = 1; i < kContentFeatureDim; ++i) CHECK(c.values.at(i) == 0.0);
}

TEST_CASE("embedders are deterministic") {
  ImageTensor img = gen_content(123, 16);
  FeatureVector a = content_features(img);
  FeatureVector b = content_features(img);
  for (int i = 0; i < kContentFeatureDim; ++i) CHECK(a.values.at(i) == b.values.at(i));
  FeatureVector sa = style_features(img);
  FeatureVector sb = style_features(img);
  for (int i = 0; i < kStyleFeatureDim; ++i) CHECK(sa.values.at(i) == sb.values.at(i));
}

TEST_CASE("both extractors pass grad_check through cosine_sim") {
  Rng rng(55);
  ImageTensor fixed = rand_image(rng);
  FeatureVector fc = content_features(fixed);
  FeatureVector fsv = style_features(fixed);
  Tensor x = rand_image(rng).tensor();
  double ec = grad_check(
      [&fc](const Tensor& t) { return cosine_sim(content_features(ImageTensor(t)), fc); }, x,
      1e-4);
  double es = grad_check(
      [&fsv](const Tensor& t) { return cosine_sim(style_features(ImageTensor(t)), fsv); }, x,
      1e-4);
  CHECK(ec < 1e-5);
  CHECK(es < 1e-5);
}

TEST_CASE("content features require pool-compatible sizes") {
  CHECK_THROWS_AS(content_features(ImageTensor(Tensor::zeros({3, 12, 12}))), Error);
  CHECK_NOTHROW(content_features(ImageTensor(Tensor::full({3, 8, 8}, 0.3))));
  CHECK_NOTHROW(content_features(ImageTensor(Tensor::full({3, 32, 32}, 0.3))));
}

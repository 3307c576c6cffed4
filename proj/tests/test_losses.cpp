// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "csg/embedder.hpp"
#include "csg/error.hpp"
#include "csg/gradcheck.hpp"
#include "csg/losses.hpp"
#include "csg/rng.hpp"
#include "csg/synth_data.hpp"

using namespace csg;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("base_loss vanishes at the exact velocity") {
  Rng rng(1);
  Tensor z = rand_tensor({3, 4, 4}, rng);
  Tensor eps = rand_tensor({3, 4, 4}, rng);
  Tensor v = sub(eps, z);
  CHECK(base_loss(v, z, eps, 0.4).value() == 0.0);
}

TEST_CASE("base_loss of a unit residual is w(t)") {
  Rng rng(2);
  Tensor z = rand_tensor({3, 4, 4}, rng);
  Tensor eps = rand_tensor({3, 4, 4}, rng);
  Tensor v = add_scalar(sub(eps, z), 1.0);
  CHECK(base_loss(v, z, eps, 0.8).value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("base_loss gradient is 2 w(t) (v - target) / N") {
  Rng rng(3);
  Tensor z = rand_tensor({3, 4, 4}, rng);
  Tensor eps = rand_tensor({3, 4, 4}, rng);
  Tensor v = rand_tensor({3, 4, 4}, rng);
  double t = 0.65;

  Tape tape;
  Tape::Scope scope(tape);
  Tensor vt = tape.watch(v);
  GradMap g = tape.backward(base_loss(vt, z, eps, t));
  const Tensor& gv = g.grad(vt);
  double n = static_cast<double>(v.size());
  for (int i = 0; i < v.size(); ++i) {
    double target = eps.at(i) - z.at(i);
    CHECK(gv.at(i) == doctest::Approx(2.0 * (v.at(i) - target) / n).epsilon(1e-12));
  }
  // and against finite differences
  CHECK(grad_check([&](const Tensor& x) { return base_loss(x, z, eps, t); }, v) < 1e-7);
}

TEST_CASE("semantic_loss_from_sims reproduces the weighted composition") {
  SemanticLossWeights w;  // 0.5 / 0.3 / 0.2
  Tensor l = semantic_loss_from_sims(Tensor::scalar(0.9), Tensor::scalar(0.8),
                                     Tensor::scalar(0.3), w);
  CHECK(l.value() == doctest::Approx(0.5 * 0.1 + 0.3 * 0.2 + 0.2 * 0.3).epsilon(1e-12));
}

TEST_CASE("semantic_loss on identical images keeps only the repulsion term") {
  ImageTensor img = gen_content(5, 16);
  ImageTensor style = gen_content(6, 16);
  SemanticLossWeights w;
  double c = cosine_sim(style_features(img), style_features(style)).value();
  double loss = semantic_loss(img, img, img, style, w).value();
  CHECK(loss == doctest::Approx(0.2 * c).epsilon(1e-9));
  // and when the output equals the style image the repulsion term is 0.2
  double loss_style = semantic_loss(style, img, img, style, w).value();
  double c_t = cosine_sim(content_features(style), content_features(img)).value();
  CHECK(loss_style == doctest::Approx(0.5 * (1 - c_t) + 0.3 * (1 - c_t) + 0.2).epsilon(1e-9));
}

TEST_CASE("semantic_loss decreases as target similarity rises") {
  SemanticLossWeights w;
  double prev = 1e9;
  for (double sim : {0.0, 0.3, 0.6, 0.9}) {
    double l = semantic_loss_from_sims(Tensor::scalar(sim), Tensor::scalar(0.5),
                                       Tensor::scalar(0.1), w)
                   .value();
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("semantic_loss is bounded below by -lambda_style") {
  SemanticLossWeights w;
  double l = semantic_loss_from_sims(Tensor::scalar(1.0), Tensor::scalar(1.0),
                                     Tensor::scalar(-1.0), w)
                 .value();
  CHECK(l == doctest::Approx(-w.lambda_style_repulsion).epsilon(1e-12));
}

TEST_CASE("frequency_loss vanishes when prediction equals target") {
  Rng rng(4);
  FrequencyLossConfig cfg;
  FrequencyConfig fcfg;
  Tensor z = rand_tensor({3, 8, 8}, rng);
  CHECK(frequency_loss(z, z, cfg, fcfg).value() == 0.0);
}

TEST_CASE("one differing high band contributes lambda_freq * w_high * log(e)") {
  FrequencyLossConfig cfg;  // 0.1 / 1.0 / 2.0
  Rng rng(5);
  FrequencyConfig fcfg;
  Tensor z = rand_tensor({1, 8, 8}, rng);
  FrequencyPyramid base = dog_decompose_tensor(z, fcfg);

  FrequencyPyramid shifted = base;
  // Pick a perturbation of band 2 whose squared norm is exactly e-1.
  Tensor delta = rand_tensor({1, 8, 8}, rng);
  double sq = 0;
  for (double v : delta.data()) sq += v * v;
  delta = mul_scalar(delta, std::sqrt((std::exp(1.0) - 1.0) / sq));
  shifted.high_bands[2] = add(shifted.high_bands[2], delta);

  double loss = frequency_loss_from_pyramids(shifted, base, cfg).value();
  CHECK(loss == doctest::Approx(0.1 * 2.0 * 1.0).epsilon(1e-9));
}

TEST_CASE("frequency_loss with w_high=0 reduces to weighted low-band MSE") {
  Rng rng(6);
  FrequencyLossConfig cfg;
  cfg.w_high = 0.0;
  FrequencyConfig fcfg;
  Tensor a = rand_tensor({3, 8, 8}, rng);
  Tensor b = rand_tensor({3, 8, 8}, rng);
  FrequencyPyramid pa = dog_decompose_tensor(a, fcfg);
  FrequencyPyramid pb = dog_decompose_tensor(b, fcfg);
  double expect = 0;
  for (size_t k = 0; k < pa.low_levels.size(); ++k) {
    double mse = 0;
    for (int i = 0; i < pa.low_levels[k].size(); ++i) {
      double d = pa.low_levels[k].at(i) - pb.low_levels[k].at(i);
      mse += d * d;
    }
    expect += cfg.w_low * mse / static_cast<double>(pa.low_levels[k].size());
  }
  expect *= cfg.lambda_freq;
  CHECK(frequency_loss(a, b, cfg, fcfg).value() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("frequency_loss passes grad_check on random pairs") {
  Rng rng(7);
  FrequencyLossConfig cfg;
  FrequencyConfig fcfg;
  Tensor target = rand_tensor({3, 8, 8}, rng);
  double err = grad_check(
      [&](const Tensor& z) { return frequency_loss(z, target, cfg, fcfg); },
      rand_tensor({3, 8, 8}, rng));
  CHECK(err < 1e-5);
}

TEST_CASE("warmup_steps rounds the fraction") {
  CHECK(warmup_steps(0.6, 1000) == 600);
  CHECK(warmup_steps(0.6, 10) == 6);
  CHECK(warmup_steps(0.5, 7) == 4);  // round half away from zero
  CHECK_THROWS_AS(warmup_steps(0.0, 10), Error);
  CHECK_THROWS_AS(warmup_steps(1.0, 10), Error);
}

TEST_CASE("stage switch is inclusive at S_warmup") {
  CHECK(stage_for_step(600, 600) == 1);
  CHECK(stage_for_step(601, 600) == 2);
  CHECK(stage_for_step(0, 600) == 1);
  // S_warmup = 0.6 * S_total for S_total = 1000 switches after step 600
  int sw = warmup_steps(0.6, 1000);
  CHECK(stage_for_step(600, sw) == 1);
  CHECK(stage_for_step(601, sw) == 2);
}

TEST_CASE("stage_loss composes per stage") {
  Rng rng(8);
  SemanticLossWeights sem;
  FrequencyLossConfig freq;
  FrequencyConfig fcfg;
  Tensor z_target = rand_tensor({3, 8, 8}, rng, 0, 1);
  Tensor eps = rand_tensor({3, 8, 8}, rng);
  Tensor v_hat = rand_tensor({3, 8, 8}, rng);
  Tensor z_hat = rand_tensor({3, 8, 8}, rng, 0.2, 0.8);
  ImageTensor img_hat(rand_tensor({3, 16, 16}, rng, 0, 1));
  ImageTensor img_t(rand_tensor({3, 16, 16}, rng, 0, 1));
  ImageTensor img_c(rand_tensor({3, 16, 16}, rng, 0, 1));
  ImageTensor img_s(rand_tensor({3, 16, 16}, rng, 0, 1));
  StageInputs in{v_hat, z_target, eps, 0.5, z_hat, img_hat, img_t, img_c, img_s};

  LossBreakdown b1 = stage_loss(in, 100, 600, sem, freq, fcfg);
  CHECK(b1.stage == 1);
  CHECK(b1.frequency.value() == 0.0);
  CHECK(b1.stage_total.value() ==
        doctest::Approx(b1.base.value() + b1.semantic.value()).epsilon(1e-12));

  LossBreakdown b2 = stage_loss(in, 601, 600, sem, freq, fcfg);
  CHECK(b2.stage == 2);
  CHECK(b2.semantic.value() == 0.0);
  CHECK(b2.stage_total.value() ==
        doctest::Approx(b2.base.value() + b2.frequency.value()).epsilon(1e-12));
  CHECK(b2.base.value() == doctest::Approx(b1.base.value()).epsilon(1e-12));
}

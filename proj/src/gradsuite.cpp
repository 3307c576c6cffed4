// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/gradsuite.hpp"

#include <cmath>

#include "csg/codec.hpp"
#include "csg/corruption.hpp"
#include "csg/denoiser.hpp"
#include "csg/embedder.hpp"
#include "csg/frequency.hpp"
#include "csg/losses.hpp"
#include "csg/reward.hpp"
#include "csg/rng.hpp"

namespace csg {

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor::from_data(std::move(shape), std::move(data));
}

// Keeps relu/clamp test points away from their kinks.
Tensor rand_away_from(Shape shape, Rng& rng, double gap) {
  Tensor t = rand_tensor(std::move(shape), rng);
  std::vector<double> d(t.data());
  for (double& v : d) {
    if (std::abs(v) < gap) v = v >= 0 ? v + gap : v - gap;
  }
  return Tensor::from_data(t.shape(), std::move(d));
}

}  // namespace

std::vector<GradCheckCase> run_grad_suite() {
  std::vector<GradCheckCase> out;
  Rng rng(20260809);

  auto add_case = [&out](const std::string& name, const ScalarFn& f, const Tensor& x,
                         double step = 1e-5) {
    out.push_back(GradCheckCase{name, grad_check(f, x, step)});
  };

  // --- elementwise and broadcast ops ---
  Tensor b34 = rand_tensor({3, 4}, rng);
  add_case("add", [&](const Tensor& x) { return sum(add(x, b34)); }, rand_tensor({3, 4}, rng));
  add_case("sub", [&](const Tensor& x) { return sum(sub(x, b34)); }, rand_tensor({3, 4}, rng));
  add_case("mul", [&](const Tensor& x) { return sum(mul(x, b34)); }, rand_tensor({3, 4}, rng));
  add_case("mul.rhs", [&](const Tensor& x) { return sum(mul(b34, x)); }, rand_tensor({3, 4}, rng));
  Tensor denom = rand_tensor({3, 4}, rng, 0.5, 1.5);
  add_case("div", [&](const Tensor& x) { return sum(div(x, denom)); }, rand_tensor({3, 4}, rng));
  add_case("div.rhs", [&](const Tensor& x) { return sum(div(b34, x)); },
           rand_tensor({3, 4}, rng, 0.5, 1.5));
  add_case("add_scalar", [&](const Tensor& x) { return sum(add_scalar(x, 0.7)); },
           rand_tensor({5}, rng));
  add_case("mul_scalar", [&](const Tensor& x) { return sum(mul_scalar(x, -1.3)); },
           rand_tensor({5}, rng));
  Tensor sc = Tensor::scalar(0.8);
  add_case("add_s", [&](const Tensor& x) { return sum(add_s(x, sc)); }, rand_tensor({4}, rng));
  add_case("add_s.scalar", [&](const Tensor& s) { return sum(add_s(b34, s)); },
           Tensor::scalar(0.3));
  add_case("sub_s.scalar", [&](const Tensor& s) { return sum(sub_s(b34, s)); },
           Tensor::scalar(0.3));
  add_case("mul_s", [&](const Tensor& x) { return sum(mul_s(x, sc)); }, rand_tensor({4}, rng));
  add_case("mul_s.scalar", [&](const Tensor& s) { return sum(mul_s(b34, s)); },
           Tensor::scalar(0.4));
  add_case("div_s", [&](const Tensor& x) { return sum(div_s(x, sc)); }, rand_tensor({4}, rng));
  add_case("div_s.scalar", [&](const Tensor& s) { return sum(div_s(b34, s)); },
           Tensor::scalar(0.9));

  // --- unary ---
  add_case("relu", [&](const Tensor& x) { return sum(relu(x)); },
           rand_away_from({3, 4}, rng, 0.05));
  add_case("silu", [&](const Tensor& x) { return sum(silu(x)); }, rand_tensor({3, 4}, rng, -2, 2));
  add_case("log", [&](const Tensor& x) { return sum(log(x)); },
           rand_tensor({6}, rng, 0.5, 1.5));
  add_case("exp", [&](const Tensor& x) { return sum(exp(x)); }, rand_tensor({6}, rng));
  add_case("sqrt", [&](const Tensor& x) { return sum(sqrt(x)); },
           rand_tensor({6}, rng, 0.5, 1.5));
  add_case("square", [&](const Tensor& x) { return sum(square(x)); }, rand_tensor({6}, rng));
  add_case("mean", [&](const Tensor& x) { return mean(x); }, rand_tensor({3, 5}, rng));
  add_case("sum", [&](const Tensor& x) { return sum(x); }, rand_tensor({3, 5}, rng));

  // --- structure ---
  Tensor other = rand_tensor({2, 4, 4}, rng);
  add_case("concat_channels",
           [&](const Tensor& x) { return sum(square(concat_channels({x, other}))); },
           rand_tensor({3, 4, 4}, rng));
  add_case("slice_channels",
           [&](const Tensor& x) { return sum(square(slice_channels(x, 1, 3))); },
           rand_tensor({4, 3, 3}, rng));
  add_case("stack_scalars",
           [&](const Tensor& x) {
             return sum(square(stack_scalars({mean(x), sum(x), Tensor::scalar(0.2)})));
           },
           rand_tensor({4}, rng));
  add_case("broadcast_channel",
           [&](const Tensor& x) { return sum(square(broadcast_channel(x, 3, 5))); },
           rand_tensor({4}, rng));
  add_case("embedding_row",
           [&](const Tensor& x) { return sum(square(embedding_row(x, 1))); },
           rand_tensor({3, 4}, rng));
  add_case("reshape", [&](const Tensor& x) { return sum(square(reshape(x, {12}))); },
           rand_tensor({3, 4}, rng));

  // --- spatial ---
  Tensor conv_w = rand_tensor({2, 3, 3, 3}, rng, -0.5, 0.5);
  Tensor conv_x = rand_tensor({3, 5, 5}, rng);
  add_case("conv2d.x", [&](const Tensor& x) { return sum(square(conv2d(x, conv_w, 1))); },
           conv_x);
  add_case("conv2d.w", [&](const Tensor& w) { return sum(square(conv2d(conv_x, w, 1))); },
           conv_w);
  Tensor bias = rand_tensor({3}, rng);
  add_case("bias_channels.x",
           [&](const Tensor& x) { return sum(square(bias_channels(x, bias))); },
           rand_tensor({3, 4, 4}, rng));
  add_case("bias_channels.b",
           [&](const Tensor& b) { return sum(square(bias_channels(conv_x, b))); },
           rand_tensor({3}, rng));
  Tensor dw_k = rand_tensor({3, 3}, rng, -0.5, 0.5);
  Tensor dw_x = rand_tensor({2, 5, 5}, rng);
  add_case("depthwise.x",
           [&](const Tensor& x) { return sum(square(depthwise_conv2d(x, dw_k, 1, 1))); }, dw_x);
  add_case("depthwise.k",
           [&](const Tensor& k) { return sum(square(depthwise_conv2d(dw_x, k, 1, 1))); }, dw_k);
  add_case("avg_pool2x2", [&](const Tensor& x) { return sum(square(avg_pool2x2(x))); },
           rand_tensor({2, 4, 4}, rng));
  add_case("upsample_nearest2x",
           [&](const Tensor& x) { return sum(square(upsample_nearest2x(x))); },
           rand_tensor({2, 3, 3}, rng));
  add_case("upsample_bilinear2x",
           [&](const Tensor& x) { return sum(square(upsample_bilinear2x(x))); },
           rand_tensor({2, 3, 3}, rng));
  add_case("clamp01_straight_through",
           [&](const Tensor& x) { return sum(square(clamp01_straight_through(x))); },
           rand_tensor({2, 3, 3}, rng, 0.1, 0.9));

  // --- frequency ops ---
  add_case("low_pass", [&](const Tensor& x) { return sum(square(low_pass_tensor(x, 0.4))); },
           rand_tensor({1, 6, 6}, rng));
  add_case("gaussian_blur",
           [&](const Tensor& x) { return sum(square(gaussian_blur_tensor(x, 1.5))); },
           rand_tensor({2, 6, 6}, rng));
  FrequencyConfig fcfg;
  add_case("dog_decompose",
           [&](const Tensor& x) {
             FrequencyPyramid p = dog_decompose_tensor(x, fcfg);
             Tensor acc = sum(square(p.low_residual));
             for (const Tensor& band : p.high_bands) acc = add(acc, sum(square(band)));
             return acc;
           },
           rand_tensor({1, 6, 6}, rng));

  // --- codec and embedders ---
  add_case("decode",
           [&](const Tensor& z) {
             return sum(square(decode(LatentTensor(z)).tensor()));
           },
           rand_tensor({3, 4, 4}, rng, 0.2, 0.8));
  // The feature paths run long blur chains, so finite differences need a
  // larger step to stay above accumulated rounding noise.
  Tensor img_fixed = rand_tensor({3, 16, 16}, rng, 0.05, 0.95);
  FeatureVector content_fixed = content_features(ImageTensor(img_fixed));
  FeatureVector style_fixed = style_features(ImageTensor(img_fixed));
  add_case("content_features.cos",
           [&](const Tensor& x) {
             return cosine_sim(content_features(ImageTensor(x)), content_fixed);
           },
           rand_tensor({3, 16, 16}, rng, 0.1, 0.9), 1e-4);
  add_case("style_features.cos",
           [&](const Tensor& x) {
             return cosine_sim(style_features(ImageTensor(x)), style_fixed);
           },
           rand_tensor({3, 16, 16}, rng, 0.1, 0.9), 1e-4);

  // --- composite objectives ---
  Tensor z_target = rand_tensor({3, 8, 8}, rng);
  Tensor eps_t = rand_tensor({3, 8, 8}, rng);
  add_case("base_loss.v_hat",
           [&](const Tensor& v) { return base_loss(v, z_target, eps_t, 0.37); },
           rand_tensor({3, 8, 8}, rng));
  add_case("base_loss.z_target",
           [&](const Tensor& z) { return base_loss(eps_t, z, eps_t, 0.81); },
           rand_tensor({3, 8, 8}, rng));

  SemanticLossWeights sem;
  ImageTensor it(rand_tensor({3, 16, 16}, rng, 0.05, 0.95));
  ImageTensor ic(rand_tensor({3, 16, 16}, rng, 0.05, 0.95));
  ImageTensor is(rand_tensor({3, 16, 16}, rng, 0.05, 0.95));
  add_case("semantic_loss.z_hat",
           [&](const Tensor& z) {
             ImageTensor img_hat = decode(LatentTensor(z));
             return semantic_loss(img_hat, it, ic, is, sem);
           },
           rand_tensor({3, 8, 8}, rng, 0.25, 0.75), 1e-5);

  FrequencyLossConfig flc;
  add_case("frequency_loss.z_hat",
           [&](const Tensor& z) { return frequency_loss(z, z_target, flc, fcfg); },
           rand_tensor({3, 8, 8}, rng));
  add_case("frequency_loss.1x8x8",
           [&](const Tensor& z) {
             return frequency_loss(z, slice_channels(z_target, 0, 1), flc, fcfg);
           },
           rand_tensor({1, 8, 8}, rng));

  Tensor sampled = rand_tensor({3, 8, 8}, rng);
  add_case("pixel_loss.mean",
           [&](const Tensor& v) { return pixel_loss(v, sampled, 0.8, 0.1); },
           rand_tensor({3, 8, 8}, rng));

  add_case("total_objective",
           [&](const Tensor& v) {
             Tensor latent = base_loss(v, z_target, eps_t, 0.5);
             Tensor pixel = pixel_loss(v, sampled, -0.4, 0.1);
             return total_objective(latent, pixel, 0.05);
           },
           rand_tensor({3, 8, 8}, rng));

  // --- denoiser parameters (||v||^2 objective, every parameter tensor) ---
  Rng prng(7);
  DenoiserParams params = DenoiserParams::init(2, 4, 16, prng);
  // Non-degenerate head so the objective depends on every layer.
  params.conv_w4 = rand_tensor({3, 16, 3, 3}, prng, -0.2, 0.2);
  Tensor z_t = rand_tensor({3, 8, 8}, prng);
  ConditionBundle cond;
  cond.mode = CondMode::text_guided;
  cond.style_class = 1;
  cond.z_content_t = rand_tensor({3, 8, 8}, prng);
  cond.t = 0.42;
  for (auto& [name, tensor] : params.named()) {
    Tensor original = *tensor;
    Tensor* slot = tensor;
    add_case("denoiser." + name,
             [&params, slot, &z_t, &cond](const Tensor& x) {
               Tensor saved = *slot;
               *slot = x;
               Tensor v = predict_velocity(params, z_t, cond);
               *slot = saved;
               return sum(square(v));
             },
             original, 1e-4);
  }

  return out;
}

double grad_suite_worst(const std::vector<GradCheckCase>& cases) {
  double worst = 0;
  for (const auto& c : cases) worst = std::max(worst, c.max_rel_err);
  return worst;
}

}  // namespace csg

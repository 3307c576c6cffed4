// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/losses.hpp"

#include <cmath>

#include "csg/embedder.hpp"
#include "csg/error.hpp"
#include "csg/schedule.hpp"

namespace csg {

void SemanticLossWeights::validate() const {
  check(lambda_target >= 0 && lambda_content >= 0 && lambda_style_repulsion >= 0,
        "semantic_loss: weights must be non-negative");
}

void FrequencyLossConfig::validate() const {
  check(lambda_freq >= 0 && w_low >= 0 && w_high >= 0,
        "frequency_loss: weights must be non-negative");
}

Tensor base_loss(const Tensor& v_hat, const Tensor& z_target, const Tensor& eps_target,
                 double t) {
  check(v_hat.shape() == z_target.shape() && v_hat.shape() == eps_target.shape(),
        "base_loss: shape mismatch " + shape_str(v_hat.shape()) + " vs " +
            shape_str(z_target.shape()) + " vs " + shape_str(eps_target.shape()));
  Tensor target = sub(eps_target, z_target);
  Tensor sq = mean(square(sub(v_hat, target)));
  return mul_scalar(sq, Schedule::weight(t));
}

Tensor semantic_loss_from_sims(const Tensor& sim_target, const Tensor& sim_content,
                               const Tensor& sim_style, const SemanticLossWeights& w) {
  w.validate();
  // lambda_t*(1-sim_t) + lambda_c*(1-sim_c) + lambda_s*sim_s
  Tensor term_t = mul_scalar(add_scalar(mul_scalar(sim_target, -1.0), 1.0), w.lambda_target);
  Tensor term_c = mul_scalar(add_scalar(mul_scalar(sim_content, -1.0), 1.0), w.lambda_content);
  Tensor term_s = mul_scalar(sim_style, w.lambda_style_repulsion);
  return add(add(term_t, term_c), term_s);
}

Tensor semantic_loss(const ImageTensor& img_hat, const ImageTensor& img_target,
                     const ImageTensor& img_content, const ImageTensor& img_style,
                     const SemanticLossWeights& w) {
  FeatureVector hat_content = content_features(img_hat);
  FeatureVector hat_style = style_features(img_hat);
  Tensor sim_target = cosine_sim(hat_content, content_features(img_target));
  Tensor sim_content = cosine_sim(hat_content, content_features(img_content));
  Tensor sim_style = cosine_sim(hat_style, style_features(img_style));
  return semantic_loss_from_sims(sim_target, sim_content, sim_style, w);
}

Tensor frequency_loss_from_pyramids(const FrequencyPyramid& hat, const FrequencyPyramid& target,
                                    const FrequencyLossConfig& cfg) {
  cfg.validate();
  check(hat.high_bands.size() == target.high_bands.size() &&
            hat.low_levels.size() == target.low_levels.size(),
        "frequency_loss: pyramid level mismatch");
  Tensor total = Tensor::scalar(0.0);
  for (size_t k = 0; k < hat.high_bands.size(); ++k) {
    Tensor low_err = mean(square(sub(hat.low_levels[k], target.low_levels[k])));
    Tensor high_sq = sum(square(sub(hat.high_bands[k], target.high_bands[k])));
    Tensor high_err = log(add_scalar(high_sq, 1.0));
    total = add(total, add(mul_scalar(low_err, cfg.w_low), mul_scalar(high_err, cfg.w_high)));
  }
  return mul_scalar(total, cfg.lambda_freq);
}

Tensor frequency_loss(const Tensor& z_hat, const Tensor& z_target, const FrequencyLossConfig& cfg,
                      const FrequencyConfig& fcfg) {
  check(z_hat.shape() == z_target.shape(), "frequency_loss: shape mismatch " +
                                               shape_str(z_hat.shape()) + " vs " +
                                               shape_str(z_target.shape()));
  FrequencyPyramid hat = dog_decompose_tensor(z_hat, fcfg);
  FrequencyPyramid tgt = dog_decompose_tensor(z_target, fcfg);
  return frequency_loss_from_pyramids(hat, tgt, cfg);
}

int warmup_steps(double warmup_fraction, int s_total) {
  check(s_total > 0, "warmup_steps: S_total must be positive");
  check(warmup_fraction > 0.0 && warmup_fraction < 1.0,
        "warmup_steps: warmup_fraction must lie in (0,1)");
  return static_cast<int>(std::llround(warmup_fraction * s_total));
}

int stage_for_step(int s, int s_warmup) {
  check(s >= 0, "stage_for_step: negative step");
  return s <= s_warmup ? 1 : 2;
}

LossBreakdown stage_loss(const StageInputs& in, int s, int s_warmup,
                         const SemanticLossWeights& sem, const FrequencyLossConfig& freq,
                         const FrequencyConfig& fcfg) {
  LossBreakdown out;
  out.stage = stage_for_step(s, s_warmup);
  out.base = base_loss(in.v_hat, in.z_target, in.eps_target, in.t);
  if (out.stage == 1) {
    out.semantic = semantic_loss(in.img_hat, in.img_target, in.img_content, in.img_style, sem);
    out.frequency = Tensor::scalar(0.0);
    out.stage_total = add(out.base, out.semantic);
  } else {
    out.semantic = Tensor::scalar(0.0);
    out.frequency = frequency_loss(in.z_hat, in.z_target, freq, fcfg);
    out.stage_total = add(out.base, out.frequency);
  }
  return out;
}

}  // namespace csg

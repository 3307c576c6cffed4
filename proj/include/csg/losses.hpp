// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Latent-space objectives.
//
// base_loss: w(t) * mean || v_hat - (eps - z) ||^2 (velocity prediction).
// semantic_loss: weighted content-alignment terms plus a style repulsion
//   term that penalizes style-feature similarity with the style reference.
// frequency_loss: per-scale DoG supervision; low bands use MSE, high bands
//   use log(1 + sum of squared error) so large outlier errors are
//   down-weighted while small discrepancies stay visible.
// stage_loss: stage 1 (s <= S_warmup) totals base + semantic; stage 2 totals
//   base + frequency.

#pragma once

#include "csg/codec.hpp"
#include "csg/frequency.hpp"
#include "csg/tensor.hpp"

namespace csg {

struct SemanticLossWeights {
  double lambda_target = 0.5;
  double lambda_content = 0.3;
  double lambda_style_repulsion = 0.2;

  void validate() const;
};

struct FrequencyLossConfig {
  double lambda_freq = 0.1;
  double w_low = 1.0;
  double w_high = 2.0;

  void validate() const;
};

struct LossBreakdown {
  Tensor base;
  Tensor semantic;   // zero scalar in stage 2
  Tensor frequency;  // zero scalar in stage 1
  Tensor stage_total;
  int stage = 1;
};

// Inputs of one sample's stage loss; images are the ones in effect for the
// step (low-passed in stage 1, full-spectrum in stage 2).
struct StageInputs {
  Tensor v_hat;
  Tensor z_target;
  Tensor eps_target;
  double t;
  Tensor z_hat;  // one-step denoised estimate
  ImageTensor img_hat;
  ImageTensor img_target;
  ImageTensor img_content;
  ImageTensor img_style;
};

Tensor base_loss(const Tensor& v_hat, const Tensor& z_target, const Tensor& eps_target,
                 double t);

// Combination of Eq-level similarity scalars; the full loss computes the
// sims with the embedders and delegates here.
Tensor semantic_loss_from_sims(const Tensor& sim_target, const Tensor& sim_content,
                               const Tensor& sim_style, const SemanticLossWeights& w);

Tensor semantic_loss(const ImageTensor& img_hat, const ImageTensor& img_target,
                     const ImageTensor& img_content, const ImageTensor& img_style,
                     const SemanticLossWeights& w);

// Band-pair aggregation; pyramids must have equal level counts and shapes.
Tensor frequency_loss_from_pyramids(const FrequencyPyramid& hat, const FrequencyPyramid& target,
                                    const FrequencyLossConfig& cfg);

Tensor frequency_loss(const Tensor& z_hat, const Tensor& z_target, const FrequencyLossConfig& cfg,
                      const FrequencyConfig& fcfg);

// Number of warmup steps: round(fraction * S_total).
int warmup_steps(double warmup_fraction, int s_total);

// 1 while s <= S_warmup (inclusive boundary), else 2.
int stage_for_step(int s, int s_warmup);

LossBreakdown stage_loss(const StageInputs& in, int s, int s_warmup,
                         const SemanticLossWeights& sem, const FrequencyLossConfig& freq,
                         const FrequencyConfig& fcfg);

}  // namespace csg

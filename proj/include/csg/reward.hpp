// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pixel-space reward learning. Rewards are plain scalars evaluated on the
// decoded sampled output (never differentiated through); the policy gradient
// enters the graph through pixel_loss, a Gaussian log-density of the sampled
// velocity around the predicted mean scaled by the advantage. The baseline
// is an exponential moving average of observed total rewards.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "csg/codec.hpp"
#include "csg/rng.hpp"
#include "csg/tensor.hpp"

namespace csg {

struct RewardWeights {
  double omega_content = 1.0;
  double omega_style = 1.0;
  double omega_perceptual = 0.5;
  double omega_adversarial = 0.0;  // off by default

  void validate() const;
};

struct RewardBundle {
  double r_content = 0;
  double r_style = 0;
  double r_perceptual = 0;
  double r_adversarial = 0;
  double r_total = 0;
  double advantage = 0;
};

struct Baseline {
  double value = 0;
  double ema_decay = 0.9;
  bool initialized = false;
};

// Timestep-conditioned baseline: one EMA cell per t-bin. Rewards correlate
// strongly with the drawn timestep (low-noise steps score high regardless of
// the policy), so conditioning the baseline on t removes that variance from
// the advantage.
struct TimestepBaseline {
  std::vector<Baseline> bins;
  explicit TimestepBaseline(int num_bins = 8, double ema_decay = 0.9);
  int bin_of(double t) const;
  // Advantage of reward r observed at timestep t (0 while the bin is empty).
  double advantage(double t, double r) const;
  void observe(double t, double r);
};

// Optional adversarial critic: two conv layers, mean logit head. Trained
// alternately with BCE on (real, generated) pairs when enabled.
struct Discriminator {
  Tensor conv_w1, conv_b1;
  Tensor conv_w2, conv_b2;
  static Discriminator init(Rng& rng);
  std::vector<std::pair<std::string, Tensor*>> named();
  Discriminator watched(Tape& tape) const;
};

// Mean "real" logit of the critic for an image.
Tensor discriminator_logit(const Discriminator& d, const Tensor& img);

// Weighted reward aggregation (composition of precomputed component rewards).
double aggregate_rewards(const RewardWeights& w, double r_content, double r_style,
                         double r_perceptual, double r_adversarial);

// Component rewards of a decoded output. Inputs are detached internally;
// pass the discriminator only when the adversarial reward is enabled.
RewardBundle compute_rewards(const ImageTensor& img_hat, const ImageTensor& img_target,
                             const ImageTensor& img_content, const ImageTensor& img_style,
                             const RewardWeights& w, const Discriminator* disc = nullptr);

// First observation initializes the value; later ones fold in with
// value <- decay * value + (1 - decay) * r_total.
Baseline update_baseline(const Baseline& b, double r_total);

// -A * log pi(sample | mean) for a fixed-variance Gaussian policy over the
// velocity; the dropped constant makes the loss zero at sample == mean.
// Gradient flows into the mean only.
Tensor pixel_loss(const Tensor& v_hat_mean, const Tensor& sampled_output, double advantage,
                  double pg_sigma);

// l_latent + lambda_pixel * l_pixel.
Tensor total_objective(const Tensor& l_latent, const Tensor& l_pixel, double lambda_pixel);

}  // namespace csg

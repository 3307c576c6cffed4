// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conditioning corruption for the disentanglement stage.
//
// The target latent is noised with standard Gaussian noise under the shared
// timestep; the content and style conditionings receive amplified noise
// (eps + sqrt(gamma^2-1) * eps', marginally N(0, gamma^2 I)) with
// gamma_style > gamma_content, creating an information hierarchy across the
// three branches. Independently per branch, with probability p the noised
// conditioning is replaced by pure standard-normal noise. Amplification
// strengths decay linearly to 1.0 over the warmup steps.

#pragma once

#include "csg/codec.hpp"
#include "csg/rng.hpp"
#include "csg/tensor.hpp"

namespace csg {

struct CorruptionConfig {
  double gamma_content = 1.5;
  double gamma_style = 2.0;
  double replace_prob = 0.1;
  double warmup_fraction = 0.6;

  void validate() const;
};

struct CorruptedBatch {
  Tensor z_target_t;
  Tensor z_content_t;
  Tensor z_style_t;
  Tensor eps_target;
  double t = 0.0;
  bool content_replaced = false;
  bool style_replaced = false;
};

// Standard normal tensor.
Tensor gaussian_noise(const Shape& shape, Rng& rng);

// eps + sqrt(gamma^2 - 1) * eps'; requires gamma >= 1.
Tensor amplified_noise(double gamma, const Shape& shape, Rng& rng);

// (1 - sigma_t) * z + sigma_t * eps.
Tensor noise_latent(const Tensor& z, double sigma_t, const Tensor& eps);

// Linear decay from gamma_init at s=0 to 1.0 at s=S_warmup; 1.0 afterwards.
double decay_gamma(double gamma_init, int s, int s_warmup);

// Full corruption of one sample's three branches at shared timestep t.
// gamma_content/gamma_style in cfg must already be decayed for step s.
CorruptedBatch corrupt_batch(const Tensor& z_target, const Tensor& z_content,
                             const Tensor& z_style, double t, const CorruptionConfig& cfg,
                             Rng& rng);

}  // namespace csg

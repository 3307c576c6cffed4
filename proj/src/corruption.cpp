// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/corruption.hpp"

#include <cmath>

#include "csg/error.hpp"
#include "csg/schedule.hpp"

namespace csg {

void CorruptionConfig::validate() const {
  check(gamma_content >= 1.0, "corruption: gamma_content must be >= 1");
  check(gamma_style > gamma_content || (gamma_style == 1.0 && gamma_content == 1.0),
        "corruption: gamma_style must exceed gamma_content (or both equal 1)");
  check(replace_prob >= 0.0 && replace_prob < 1.0 + 1e-12,
        "corruption: replace_prob must lie in [0,1]");
  check(warmup_fraction > 0.0 && warmup_fraction < 1.0,
        "corruption: warmup_fraction must lie in (0,1)");
}

Tensor gaussian_noise(const Shape& shape, Rng& rng) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = rng.normal();
  return Tensor::from_data(shape, std::move(data));
}

Tensor amplified_noise(double gamma, const Shape& shape, Rng& rng) {
  check(gamma >= 1.0, "amplified_noise: gamma must be >= 1");
  // Both draws always happen, so the rng stream is independent of gamma.
  Tensor eps = gaussian_noise(shape, rng);
  Tensor eps_prime = gaussian_noise(shape, rng);
  double coeff = std::sqrt(gamma * gamma - 1.0);
  return add(eps, mul_scalar(eps_prime, coeff));
}

Tensor noise_latent(const Tensor& z, double sigma_t, const Tensor& eps) {
  check(z.shape() == eps.shape(), "noise_latent: shape mismatch " + shape_str(z.shape()) +
                                      " vs " + shape_str(eps.shape()));
  check(sigma_t >= 0.0 && sigma_t <= 1.0, "noise_latent: sigma_t outside [0,1]");
  return add(mul_scalar(z, 1.0 - sigma_t), mul_scalar(eps, sigma_t));
}

double decay_gamma(double gamma_init, int s, int s_warmup) {
  check(s_warmup > 0, "decay_gamma: S_warmup must be positive");
  check(s >= 0, "decay_gamma: negative step");
  double frac = std::max(0.0, 1.0 - static_cast<double>(s) / static_cast<double>(s_warmup));
  return 1.0 + (gamma_init - 1.0) * frac;
}

CorruptedBatch corrupt_batch(const Tensor& z_target, const Tensor& z_content,
                             const Tensor& z_style, double t, const CorruptionConfig& cfg,
                             Rng& rng) {
  check(z_target.shape() == z_content.shape() && z_target.shape() == z_style.shape(),
        "corrupt_batch: latent shape mismatch " + shape_str(z_target.shape()) + " vs " +
            shape_str(z_content.shape()) + " vs " + shape_str(z_style.shape()));
  double sigma_t = Schedule::sigma(t);

  CorruptedBatch out;
  out.t = t;
  Tensor eps_target = gaussian_noise(z_target.shape(), rng);
  out.eps_target = eps_target;
  out.z_target_t = noise_latent(z_target, sigma_t, eps_target);
  out.z_content_t = noise_latent(z_content, sigma_t, amplified_noise(cfg.gamma_content, z_content.shape(), rng));
  out.z_style_t = noise_latent(z_style, sigma_t, amplified_noise(cfg.gamma_style, z_style.shape(), rng));

  // Replacement draws are independent per branch; the noise tensors are
  // drawn unconditionally to keep the rng stream layout fixed.
  bool replace_content = rng.bernoulli(cfg.replace_prob);
  Tensor content_noise = gaussian_noise(z_content.shape(), rng);
  bool replace_style = rng.bernoulli(cfg.replace_prob);
  Tensor style_noise = gaussian_noise(z_style.shape(), rng);
  if (replace_content) {
    out.z_content_t = content_noise;
    out.content_replaced = true;
  }
  if (replace_style) {
    out.z_style_t = style_noise;
    out.style_replaced = true;
  }
  return out;
}

}  // namespace csg

// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/reward.hpp"

#include <cmath>

#include "csg/embedder.hpp"
#include "csg/error.hpp"

namespace csg {

void RewardWeights::validate() const {
  check(omega_content >= 0 && omega_style >= 0 && omega_perceptual >= 0 &&
            omega_adversarial >= 0,
        "reward: weights must be non-negative");
}

Discriminator Discriminator::init(Rng& rng) {
  auto normal = [&rng](Shape shape, double std) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = std * rng.normal();
    return Tensor::from_data(std::move(shape), std::move(data));
  };
  Discriminator d;
  d.conv_w1 = normal({8, 3, 3, 3}, std::sqrt(2.0 / 27.0));
  d.conv_b1 = Tensor::zeros({8});
  d.conv_w2 = normal({1, 8, 3, 3}, std::sqrt(2.0 / 72.0));
  d.conv_b2 = Tensor::zeros({1});
  return d;
}

std::vector<std::pair<std::string, Tensor*>> Discriminator::named() {
  return {{"disc1.weight", &conv_w1},
          {"disc1.bias", &conv_b1},
          {"disc2.weight", &conv_w2},
          {"disc2.bias", &conv_b2}};
}

Discriminator Discriminator::watched(Tape& tape) const {
  Discriminator d = *this;
  for (auto& [name, t] : d.named()) *t = tape.watch(*t);
  return d;
}

Tensor discriminator_logit(const Discriminator& d, const Tensor& img) {
  Tensor a1 = relu(bias_channels(conv2d(img, d.conv_w1, 1), d.conv_b1));
  Tensor a2 = bias_channels(conv2d(a1, d.conv_w2, 1), d.conv_b2);
  return mean(a2);
}

double aggregate_rewards(const RewardWeights& w, double r_content, double r_style,
                         double r_perceptual, double r_adversarial) {
  return w.omega_content * r_content + w.omega_style * r_style +
         w.omega_perceptual * r_perceptual + w.omega_adversarial * r_adversarial;
}

RewardBundle compute_rewards(const ImageTensor& img_hat, const ImageTensor& img_target,
                             const ImageTensor& img_content, const ImageTensor& img_style,
                             const RewardWeights& w, const Discriminator* disc) {
  w.validate();
  ImageTensor hat(img_hat.tensor().detached());

  RewardBundle out;
  out.r_content =
      cosine_sim(content_features(hat), content_features(img_content)).value();
  out.r_style = cosine_sim(style_features(hat), style_features(img_style)).value();

  // Negative mean absolute pixel error against the target (perceptual proxy).
  const auto& a = hat.tensor().data();
  const auto& b = img_target.tensor().data();
  check(a.size() == b.size(), "compute_rewards: image size mismatch");
  double mae = 0;
  for (size_t i = 0; i < a.size(); ++i) mae += std::abs(a[i] - b[i]);
  out.r_perceptual = -mae / static_cast<double>(a.size());

  if (w.omega_adversarial > 0) {
    check(disc != nullptr, "compute_rewards: adversarial reward enabled without discriminator");
    out.r_adversarial = discriminator_logit(*disc, hat.tensor()).value();
  }
  out.r_total =
      aggregate_rewards(w, out.r_content, out.r_style, out.r_perceptual, out.r_adversarial);
  check(std::isfinite(out.r_total), "compute_rewards: non-finite total reward");
  return out;
}

Baseline update_baseline(const Baseline& b, double r_total) {
  check(std::isfinite(r_total), "update_baseline: non-finite reward");
  Baseline out = b;
  if (!out.initialized) {
    out.value = r_total;
    out.initialized = true;
  } else {
    out.value = out.ema_decay * out.value + (1.0 - out.ema_decay) * r_total;
  }
  return out;
}

TimestepBaseline::TimestepBaseline(int num_bins, double ema_decay) {
  check(num_bins >= 1, "baseline: need at least one bin");
  bins.assign(static_cast<size_t>(num_bins), Baseline{0, ema_decay, false});
}

int TimestepBaseline::bin_of(double t) const {
  int b = static_cast<int>(t * static_cast<double>(bins.size()));
  return std::min(b, static_cast<int>(bins.size()) - 1);
}

double TimestepBaseline::advantage(double t, double r) const {
  const Baseline& b = bins[static_cast<size_t>(bin_of(t))];
  return b.initialized ? r - b.value : 0.0;
}

void TimestepBaseline::observe(double t, double r) {
  size_t i = static_cast<size_t>(bin_of(t));
  bins[i] = update_baseline(bins[i], r);
}

Tensor pixel_loss(const Tensor& v_hat_mean, const Tensor& sampled_output, double advantage,
                  double pg_sigma) {
  check(pg_sigma > 0.0, "pixel_loss: pg_sigma must be positive");
  check(v_hat_mean.shape() == sampled_output.shape(),
        "pixel_loss: shape mismatch " + shape_str(v_hat_mean.shape()) + " vs " +
            shape_str(sampled_output.shape()));
  // -A * log pi = A * ||sample - mean||^2 / (2 sigma^2) up to the dropped
  // normalization constant; the sample is fixed data.
  Tensor diff = sub(sampled_output.detached(), v_hat_mean);
  return mul_scalar(sum(square(diff)), advantage / (2.0 * pg_sigma * pg_sigma));
}

Tensor total_objective(const Tensor& l_latent, const Tensor& l_pixel, double lambda_pixel) {
  check(lambda_pixel >= 0.0, "total_objective: lambda_pixel must be non-negative");
  check(l_latent.size() == 1 && l_pixel.size() == 1,
        "total_objective: losses must be scalars");
  return add(l_latent, mul_scalar(l_pixel, lambda_pixel));
}

}  // namespace csg

// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/denoiser.hpp"

#include <cmath>

#include "csg/error.hpp"

namespace csg {

namespace {

Tensor he_normal(Shape shape, int fan_in, Rng& rng, DType dt) {
  double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = std * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), dt);
}

}  // namespace

DenoiserParams DenoiserParams::init(int num_styles, int embed_dim, int hidden, Rng& rng,
                                    DType dt) {
  check(num_styles >= 1 && embed_dim >= 1 && hidden >= 1, "denoiser: invalid architecture");
  DenoiserParams p;
  p.hidden = hidden;
  p.embed_dim = embed_dim;
  p.num_styles = num_styles;
  int in_ch = p.in_channels();
  p.conv_w1 = he_normal({hidden, in_ch, 3, 3}, in_ch * 9, rng, dt);
  p.conv_b1 = Tensor::zeros({hidden}, dt);
  p.conv_w2 = he_normal({hidden, hidden, 3, 3}, hidden * 9, rng, dt);
  p.conv_b2 = Tensor::zeros({hidden}, dt);
  p.conv_w3 = he_normal({hidden, hidden, 3, 3}, hidden * 9, rng, dt);
  p.conv_b3 = Tensor::zeros({hidden}, dt);
  p.conv_w4 = Tensor::zeros({3, hidden, 3, 3}, dt);
  p.conv_b4 = Tensor::zeros({3}, dt);
  {
    std::vector<double> e(static_cast<size_t>(num_styles) * embed_dim);
    for (double& v : e) v = 0.5 * rng.normal();
    p.style_embed = Tensor::from_data({num_styles, embed_dim}, std::move(e), dt);
  }
  return p;
}

std::vector<std::pair<std::string, Tensor*>> DenoiserParams::named() {
  return {
      {"conv1.weight", &conv_w1}, {"conv1.bias", &conv_b1}, {"conv2.weight", &conv_w2},
      {"conv2.bias", &conv_b2},   {"conv3.weight", &conv_w3}, {"conv3.bias", &conv_b3},
      {"conv4.weight", &conv_w4}, {"conv4.bias", &conv_b4},   {"style_embed", &style_embed},
  };
}

std::vector<std::pair<std::string, const Tensor*>> DenoiserParams::named() const {
  auto* self = const_cast<DenoiserParams*>(this);
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : self->named()) out.emplace_back(name, t);
  return out;
}

DenoiserParams DenoiserParams::watched(Tape& tape) const {
  DenoiserParams p = *this;
  for (auto& [name, t] : p.named()) *t = tape.watch(*t);
  return p;
}

Tensor predict_velocity(const DenoiserParams& params, const Tensor& z_t,
                        const ConditionBundle& cond) {
  check(z_t.rank() == 3 && z_t.dim(0) == 3,
        "predict_velocity: expected [3,h,w] target latent, got shape " + shape_str(z_t.shape()));
  check(cond.z_content_t.shape() == z_t.shape(),
        "predict_velocity: content shape " + shape_str(cond.z_content_t.shape()) +
            " does not match target " + shape_str(z_t.shape()));
  check(cond.t >= 0.0 && cond.t <= 1.0, "predict_velocity: t outside [0,1]");
  int h = z_t.dim(1), w = z_t.dim(2);

  Tensor style_block, embed_block;
  if (cond.mode == CondMode::reference_guided) {
    check(cond.z_style_t.defined(), "predict_velocity: reference mode requires z_style_t");
    check(cond.style_class < 0, "predict_velocity: reference mode must not carry style_class");
    check(cond.z_style_t.shape() == z_t.shape(),
          "predict_velocity: style shape " + shape_str(cond.z_style_t.shape()) +
              " does not match target " + shape_str(z_t.shape()));
    style_block = cond.z_style_t;
    embed_block = Tensor::zeros({params.embed_dim, h, w});
  } else {
    check(!cond.z_style_t.defined(), "predict_velocity: text mode must not carry z_style_t");
    check(cond.style_class >= 0 && cond.style_class < params.num_styles,
          "predict_velocity: style_class out of range");
    style_block = Tensor::zeros({3, h, w});
    embed_block = broadcast_channel(embedding_row(params.style_embed, cond.style_class), h, w);
  }
  Tensor t_chan = Tensor::full({1, h, w}, cond.t);

  Tensor x = concat_channels({z_t, cond.z_content_t, style_block, embed_block, t_chan});
  check(x.dim(0) == params.conv_w1.dim(1),
        "predict_velocity: input channels " + std::to_string(x.dim(0)) +
            " do not match conv1 weight " + shape_str(params.conv_w1.shape()));

  Tensor a1 = silu(bias_channels(conv2d(x, params.conv_w1, 1), params.conv_b1));
  Tensor a2 = silu(bias_channels(conv2d(a1, params.conv_w2, 1), params.conv_b2));
  Tensor a3 = silu(bias_channels(conv2d(a2, params.conv_w3, 1), params.conv_b3));
  return bias_channels(conv2d(a3, params.conv_w4, 1), params.conv_b4);
}

Tensor one_step_denoise(const Tensor& z_t, const Tensor& v_hat, double sigma_t) {
  check(z_t.shape() == v_hat.shape(), "one_step_denoise: shape mismatch " +
                                          shape_str(z_t.shape()) + " vs " +
                                          shape_str(v_hat.shape()));
  return sub(z_t, mul_scalar(v_hat, sigma_t));
}

}  // namespace csg

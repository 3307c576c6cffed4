// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Toy conditional velocity predictor: four 3x3 conv layers (silu between,
// linear head) over the channel-concatenation of the noised target latent,
// the noised content latent, the style conditioning, and a constant timestep
// channel.
//
// One parameter set serves both conditioning modes through a fixed channel
// layout: [z_t(3) | content(3) | style latent(3) | style embedding(E) | t(1)].
// Reference-guided samples fill the style-latent block and zero the embedding
// block; text-guided samples do the opposite, broadcasting the learned
// style-class embedding spatially.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "csg/rng.hpp"
#include "csg/tensor.hpp"

namespace csg {

enum class CondMode { text_guided, reference_guided };

struct ConditionBundle {
  CondMode mode = CondMode::reference_guided;
  int style_class = -1;  // text mode
  Tensor z_style_t;      // reference mode
  Tensor z_content_t;
  double t = 0.0;
};

struct DenoiserParams {
  Tensor conv_w1, conv_b1;
  Tensor conv_w2, conv_b2;
  Tensor conv_w3, conv_b3;
  Tensor conv_w4, conv_b4;  // linear output head, zero-initialized
  Tensor style_embed;       // [num_styles, embed_dim]
  int hidden = 16;
  int embed_dim = 4;
  int num_styles = 4;

  static DenoiserParams init(int num_styles, int embed_dim, int hidden, Rng& rng,
                             DType dt = DType::F64);

  int in_channels() const { return 10 + embed_dim; }

  // Stable name -> tensor view used by the optimizer and the checkpoint.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  // Copy whose tensors are watched on the tape (leaves of this step).
  DenoiserParams watched(Tape& tape) const;
};

Tensor predict_velocity(const DenoiserParams& params, const Tensor& z_t,
                        const ConditionBundle& cond);

// z0_hat = z_t - sigma_t * v_hat; exact inverse of the convex-combination
// noising under the oracle velocity v = eps - z.
Tensor one_step_denoise(const Tensor& z_t, const Tensor& v_hat, double sigma_t);

}  // namespace csg

// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Staged training loop. Each step:
//   stage 1 (s <= S_warmup): low-pass preprocess the three images, corrupt
//   the conditionings with decayed amplification, velocity loss + semantic
//   loss; stage 2: full-spectrum inputs, velocity loss + frequency loss.
//   In both stages a velocity sample drawn around the prediction is decoded,
//   scored by the pixel-space rewards, and folded in through the policy
//   gradient term scaled by lambda_pixel.
//
// The loop is single-threaded and fully deterministic: every stochastic
// draw (timesteps, noise, replacement, policy samples, batch selection)
// comes from one counter-based rng stored in TrainState.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csg/corruption.hpp"
#include "csg/denoiser.hpp"
#include "csg/frequency.hpp"
#include "csg/losses.hpp"
#include "csg/reward.hpp"
#include "csg/rng.hpp"
#include "csg/synth_data.hpp"

namespace csg {

struct TrainConfig {
  int s_total = 1000;
  double warmup_fraction = 0.6;
  double learning_rate = 1e-3;  // desk-scale default; the full-scale value 5e-6 stays selectable
  double weight_decay = 1e-4;
  int batch_size = 2;
  uint64_t seed = 0;
  int checkpoint_every = 500;  // 0 disables periodic checkpoints
  CondMode cond_mode = CondMode::reference_guided;
  DType precision = DType::F64;
  int hidden = 16;
  int embed_dim = 4;
  int num_styles = 4;

  CorruptionConfig corruption;
  FrequencyConfig frequency;
  FrequencyLossConfig freq_loss;
  SemanticLossWeights semantic;
  RewardWeights reward;
  double lambda_pixel = 0.05;
  double pg_sigma = 0.1;
  double baseline_decay = 0.9;

  int s_warmup() const { return warmup_steps(warmup_fraction, s_total); }
  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m, v;
  int t = 0;
};

struct TrainState {
  int step = 0;
  DenoiserParams params;
  AdamState adam;
  TimestepBaseline baseline{8, 0.9};
  Rng rng;
  std::optional<Discriminator> disc;
  AdamState disc_adam;
};

struct StepMetrics {
  int step = 0;
  int stage = 1;
  double loss_base = 0, loss_semantic = 0, loss_frequency = 0, loss_pixel = 0, loss_total = 0;
  double r_content = 0, r_style = 0, r_total = 0, advantage = 0;
  double gamma_content = 1, gamma_style = 1, sigma_t = 0;
};

// Decoupled-weight-decay adaptive-moment update (beta1=0.9, beta2=0.999,
// eps=1e-8); the weight-decay term is scaled by the learning rate, so lr=0
// leaves parameters untouched.
void adamw_update(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  AdamState& st, double lr, double weight_decay);

TrainState init_train_state(const TrainConfig& cfg);

StepMetrics train_step(TrainState& state, const std::vector<const FourTuple*>& batch,
                       const TrainConfig& cfg);

// Forward/backward of one step without applying the update: returns the
// named parameter gradients of the batch loss. The state is taken by value,
// so the caller's rng and parameters are untouched; identical state and
// batch replay the exact stochastic draws of train_step.
std::vector<std::pair<std::string, Tensor>> step_gradients(
    TrainState state, const std::vector<const FourTuple*>& batch, const TrainConfig& cfg);

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

// Metric-log line (one JSON object, stable key order).
std::string metrics_json_line(const StepMetrics& m);

// Runs steps [state.step, S_total), writing one metric line per step to
// <out_dir>/metrics.jsonl and periodic checkpoints. Pass `resume` to
// continue from a loaded state; by default a fresh state is initialized.
TrainState run(const TrainConfig& cfg, const std::vector<FourTuple>& dataset,
               const std::string& out_dir, std::optional<TrainState> resume = std::nullopt);

}  // namespace csg

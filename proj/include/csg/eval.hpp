// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale metric suite. generate() integrates the learned velocity field
// from pure noise at t=1 down to t=0 with uniform Euler steps, conditioned on
// the tuple's clean content latent and style condition. evaluate() reports
// mean cosine similarities and the closed-form Frechet distance between
// Gaussian fits of style features over the generated and ground-truth sets.

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "csg/denoiser.hpp"
#include "csg/synth_data.hpp"

namespace csg {

struct PerStyleStats {
  double content_sim = 0;
  double style_sim = 0;
  int n = 0;
};

struct EvalReport {
  double content_sim_mean = 0, content_sim_std = 0;
  double style_sim_mean = 0, style_sim_std = 0;
  double frechet_feature_distance = 0;
  bool ffd_valid = false;  // false when fewer than 2 samples
  int n_samples = 0;
  std::map<int, PerStyleStats> per_style;
};

using VelocityField = std::function<Tensor(const Tensor& z_t, double t)>;

// Euler integration of an arbitrary field; returns the terminal latent.
Tensor integrate_field(const VelocityField& field, const Tensor& z_init, int steps);

ImageTensor generate(const DenoiserParams& params, const FourTuple& tuple, int steps,
                     CondMode mode);

EvalReport evaluate(const DenoiserParams& params, const std::vector<FourTuple>& tuples, int steps,
                    CondMode mode);

// Squared Frechet distance between Gaussian fits (mean + unbiased covariance)
// of two feature populations. Eigenvalues of the symmetrized PSD product that
// fall below zero by rounding are clipped.
double frechet_distance(const std::vector<std::vector<double>>& pop_a,
                        const std::vector<std::vector<double>>& pop_b);

std::string report_json(const EvalReport& r);

}  // namespace csg

// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Timestep machinery for the flow-matching objective: linear noise
// coefficient sigma(t) = t, uniform loss weight w(t) = 1, and uniform
// timestep sampling. One timestep is drawn per sample and shared by the
// target, content, and style branches of that sample's corruption.

#pragma once

#include "csg/rng.hpp"

namespace csg {

struct Schedule {
  // sigma(0) = 0, sigma(1) = 1, monotone non-decreasing.
  static double sigma(double t);
  static double weight(double t);
  static double sample_timestep(Rng& rng);
};

}  // namespace csg

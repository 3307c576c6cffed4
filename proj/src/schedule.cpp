// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/schedule.hpp"

#include "csg/error.hpp"

namespace csg {

double Schedule::sigma(double t) {
  check(t >= 0.0 && t <= 1.0, "schedule: t outside [0,1]");
  return t;
}

double Schedule::weight(double t) {
  check(t >= 0.0 && t <= 1.0, "schedule: t outside [0,1]");
  return 1.0;
}

double Schedule::sample_timestep(Rng& rng) { return rng.uniform(); }

}  // namespace csg

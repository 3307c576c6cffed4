// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "csg/gradcheck.hpp"

namespace csg {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0;
};

// Finite-difference verification of every differentiable op and of the
// composite objectives (velocity, semantic, frequency, policy-gradient,
// total). Deterministic inputs; runs in well under a minute.
std::vector<GradCheckCase> run_grad_suite();

double grad_suite_worst(const std::vector<GradCheckCase>& cases);

}  // namespace csg

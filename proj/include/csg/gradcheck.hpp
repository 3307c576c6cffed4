// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "csg/tensor.hpp"

namespace csg {

// Scalar-valued function of one tensor. Must run identically with and
// without gradient tracking (true for every op in this library).
using ScalarFn = std::function<Tensor(const Tensor&)>;

// Compares the reverse-mode gradient of f at x against central finite
// differences, componentwise. Returns the worst relative error with
// denominator max(|analytic|, |numeric|, 1e-8). Raises if f(x) is not
// finite or not scalar.
double grad_check(const ScalarFn& f, const Tensor& x, double step = 1e-5);

}  // namespace csg

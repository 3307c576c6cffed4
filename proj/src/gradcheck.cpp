// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "csg/error.hpp"

namespace csg {

double grad_check(const ScalarFn& f, const Tensor& x, double step) {
  check(step > 0.0, "grad_check: step must be positive");

  Tensor analytic;
  {
    Tape tape;
    Tape::Scope scope(tape);
    Tensor xt = tape.watch(x);
    Tensor y = f(xt);
    check(y.size() == 1, "grad_check: f must return a scalar");
    check(std::isfinite(y.value()), "grad_check: f(x) is not finite");
    analytic = tape.backward(y).grad(xt);
  }

  // Finite differences run without an active tape; identical arithmetic path.
  double worst = 0.0;
  std::vector<double> base(x.data());
  for (size_t i = 0; i < base.size(); ++i) {
    std::vector<double> lo = base, hi = base;
    hi[i] += step;
    lo[i] -= step;
    double fp = f(Tensor::from_data(x.shape(), hi, x.dtype())).value();
    double fm = f(Tensor::from_data(x.shape(), lo, x.dtype())).value();
    check(std::isfinite(fp) && std::isfinite(fm), "grad_check: perturbed f(x) is not finite");
    double numeric = (fp - fm) / (2.0 * step);
    double a = analytic.at(static_cast<int>(i));
    double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace csg

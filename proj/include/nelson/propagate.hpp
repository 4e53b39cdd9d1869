#pragma once

#include <functional>

#include "nelson/types.hpp"

namespace nelson {

// One classical RK4 step for y' = f(t, y) on any Eigen dense type.
template <class State, class F>
State rk4_step(const State& y, double t, double h, F&& f) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

using LinearMap = std::function<MatXc(const MatXc&)>;

// exp(-i t H) x for Hermitian H given as a map on matrices (Frobenius inner
// product). Lanczos with adaptive substeps; tol bounds the local error per
// unit time.
MatXc expmv_krylov(const LinearMap& h, const MatXc& x, double t, double tol = 1e-12,
                   int krylov_dim = 30);

// exp(t G) x for a general G by scaled Taylor series; norm_bound must bound
// ||G||.
MatXc expmv_taylor(const LinearMap& g, const MatXc& x, double t, double norm_bound);

}  // namespace nelson

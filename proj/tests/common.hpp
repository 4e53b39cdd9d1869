#pragma once

#include <cmath>
#include <random>

#include "nelson/model.hpp"

namespace testing_support {

using namespace nelson;

// Two particle modes {0, 1} and field modes {-1, 1} on a box of length 2π.
inline ModelConfig small_model(double alpha2 = 0.05) {
  ModelConfig c;
  c.dimension = 1;
  c.box_length = 2.0 * M_PI;
  c.particle_modes = {Lattice(0, 0, 0), Lattice(1, 0, 0)};
  c.field_modes = {Lattice(-1, 0, 0), Lattice(1, 0, 0)};
  c.mass = 1.0;
  c.form_factor = {1.0, 1.0};
  c.initial_u = VecXc(2);
  c.initial_u << 0.8, cplx(0.0, 0.6);
  c.initial_alpha = VecXc(2);
  const double a = std::sqrt(alpha2 / 2.0);
  c.initial_alpha << a, std::polar(a, 0.7);
  c.t_final = 0.5;
  c.dt = 1e-3;
  return c;
}

// Three particle modes and a larger field set, used where a 2-mode model is
// too degenerate to exercise a kernel.
inline ModelConfig medium_model() {
  ModelConfig c = small_model(0.2);
  c.particle_modes = {Lattice(-1, 0, 0), Lattice(0, 0, 0), Lattice(1, 0, 0)};
  c.field_modes = {Lattice(-2, 0, 0), Lattice(-1, 0, 0), Lattice(1, 0, 0), Lattice(2, 0, 0)};
  c.form_factor = {0.6, 1.0, 1.0, 0.6};
  c.initial_u = VecXc(3);
  c.initial_u << cplx(0.3, 0.1), 0.8, cplx(-0.2, 0.45);
  c.initial_alpha = VecXc(4);
  c.initial_alpha << cplx(0.1, 0.2), 0.25, cplx(-0.15, 0.05), cplx(0.0, -0.1);
  return c;
}

inline VecXc random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  VecXc v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(d(rng), d(rng));
  return v;
}

inline MatXc random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  MatXc m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(d(rng), d(rng));
  return m;
}

inline double max_abs(const MatXc& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing_support

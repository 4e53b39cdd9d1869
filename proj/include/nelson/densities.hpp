#pragma once

#include "nelson/exact.hpp"

namespace nelson {

// One-particle reduced densities of particles and field, with the pieces of
// their fluctuation expansion when available. Matrix entries are
// μ(p, p') = <e_p, μ e_p'>.
struct ReducedDensities {
  MatXc part;
  MatXc field;
  VecXc beta_part;
  VecXc beta_field;
  MatXc gamma_part;
  MatXc gamma_field;
};

// μ^part(p, p') = N^{-1} <Ψ, b_p'^* b_p Ψ>, μ^field(k, k') = N^{-1} <Ψ, a_k'^* a_k Ψ>.
ReducedDensities reduced_from_exact(const MatXc& psi, const ExactSpace& space);

// The same densities written through χ = U_N Ψ on 𝒢_{≤N}:
//   μ^part  = |φ><φ| ||χ||^2 + N^{-1/2}(|φ><β| + |β><φ|) + N^{-1}(γ - |φ><φ| tr γ)
//   μ^field = |α><α| ||χ||^2 + N^{-1/2}(|α><β| + |β><α|) + N^{-1} γ
// with β^part = <χ, [1 - N_b/N]_+^{1/2} b χ>, β^field = <χ, a χ>.
ReducedDensities expand_reduced(const MatXc& chi, const ClassicalState& s, const ExactSpace& space);

// Order-1/N model from the quasi-free two-point data and β₀₁.
ReducedDensities densities_next_order(const GeneralizedDensity& gamma, const OnePointPair& beta01,
                                      const ClassicalState& s, int N);

struct WickReport {
  double one_point = 0.0;    // max |<χ, 𝒵_I χ>| / ||χ||^2
  double three_point = 0.0;  // max |<χ, 𝒵_I 𝒵_J 𝒵_K χ>| / ||χ||^2
};

// Odd correlation functions of the ladder operators 𝒵 = (b, a, b^*, a^*).
WickReport wick_check(const MatXc& chi, const ExcitationSpace& space);

// Hermiticity defect and |tr μ^part - 1|.
struct DensityDefects {
  double hermiticity = 0.0;
  double trace = 0.0;
};
DensityDefects density_defects(const ReducedDensities& d);

}  // namespace nelson

#pragma once

#include "nelson/skg.hpp"

namespace nelson {

// Rows are field modes k, columns particle modes p: K(k,·) = q K̃(k,·) with
// K̃(k,·) = η_k T_k φ and q = 1 - |φ><φ|.
struct CouplingKernel {
  MatXc K;
  MatXc Ktilde;
  MatXc Kminus;  // Kminus(k,·) = K(-k,·)
  MatXc q;
};

CouplingKernel build_coupling(const VecXc& phi, const ModeBasis& basis, double norm_tol = 1e-8);

// D_k = q T_k q - <φ, T_k φ>; the field-fluctuation kernel is η_k D_k.
std::vector<MatXc> fluctuation_kernels(const VecXc& phi, const ModeBasis& basis);

// Operators on h2 = C^{n_p} ⊕ C^{n_f} (particle block first).
struct BlockPair {
  MatXc A;
  MatXc B;
};

BlockPair build_blocks(const ClassicalState& s, const ModeBasis& basis, const CouplingKernel& kern);
BlockPair build_blocks(const ClassicalState& s, const ModeBasis& basis);

// 𝒜 = [[A, -B], [conj B, -conj A]] on h2 ⊕ h2.
MatXc generator(const BlockPair& ab);

// Diagnostics for the bounds |Φ| <= 2|η||α|, |μ| <= |η||α|, |K|_HS <= 2|η|.
struct CouplingBounds {
  double field_sup, field_bound;
  double mu_abs, mu_bound;
  double kernel_hs, kernel_bound;
  bool hold() const {
    const double s = 1e-12;
    return field_sup <= field_bound + s && mu_abs <= mu_bound + s && kernel_hs <= kernel_bound + s;
  }
};
CouplingBounds coupling_bounds(const ClassicalState& s, const ModeBasis& basis, const FourierPair& grid);

// 𝒱 = [[u, conj v], [v, conj u]]; only u and v are stored.
struct BogMap {
  MatXc u;
  MatXc v;
  double t = 0.0;
  double t0 = 0.0;

  static BogMap identity(int n, double t0 = 0.0);
  MatXc full() const;
};

MatXc symplectic_form(int n);  // 𝒮 = diag(1, -1)

// One RK4 step of i∂𝒱 = 𝒜(t)𝒱 along the trajectory.
BogMap evolve_bog_map(const BogMap& map, const Trajectory& traj, double dt);
// Same with a caller supplied generator t -> 𝒜(t).
BogMap evolve_bog_map(const BogMap& map, const std::function<MatXc(double)>& gen, double dt);

double check_symplectic(const BogMap& map);
// Worst defect of u*u = 1 + v*v, uu* = 1 + v̄v̄*, u*v̄ = v*ū, uv* = v̄ū*.
double block_conditions_defect(const BogMap& map);
double shale_stinespring(const BogMap& map);

VecXc transform_observable(const BogMap& map, const VecXc& F);

// Γ_{IJ} = <𝒵_J^* 𝒵_I> with 𝒵 = (Z_1..Z_n, Z_1^*..Z_n^*).
struct GeneralizedDensity {
  MatXc gamma;
  double t = 0.0;

  static GeneralizedDensity vacuum(int n, double t = 0.0);
  int n() const { return int(gamma.rows() / 2); }
  // <Z_j^* Z_i> at (i, j)
  MatXc normal() const { return gamma.topLeftCorner(n(), n()); }
  // <Z_j Z_i> at (i, j)
  MatXc anomalous() const { return gamma.topRightCorner(n(), n()); }
};

GeneralizedDensity evolve_gamma(const GeneralizedDensity& g, const std::function<MatXc(double)>& gen,
                                double dt);
GeneralizedDensity evolve_gamma(const GeneralizedDensity& g, const Trajectory& traj, double dt);
// 𝒮𝒱𝒮 Γ 𝒮𝒱^*𝒮
GeneralizedDensity conjugate_gamma(const GeneralizedDensity& g0, const BogMap& map);

struct OnePointPair {
  VecXc part;
  VecXc field;
  double t = 0.0;
};

// Right-hand side of the next-order one-point equations: returns i∂_t β.
OnePointPair beta01_rhs(const OnePointPair& beta, const ClassicalState& s, const ModeBasis& basis,
                        const GeneralizedDensity& g);

// RK4 step given the classical state and Γ at t, t + dt/2, t + dt.
OnePointPair evolve_beta01(const OnePointPair& beta, const ModeBasis& basis,
                           const std::array<ClassicalState, 3>& states,
                           const std::array<GeneralizedDensity, 3>& gammas, double dt);

// Joint evolution of 𝒱, Γ and β01 sharing RK4 stages.
struct QuadState {
  BogMap map;
  GeneralizedDensity gamma;
  OnePointPair beta;
};

QuadState quad_initial(const ModeBasis& basis, const GeneralizedDensity& gamma0);
QuadState quad_step(const QuadState& s, const Trajectory& traj, double dt);

}  // namespace nelson

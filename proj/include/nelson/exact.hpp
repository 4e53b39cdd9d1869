#pragma once

#include <vector>

#include "nelson/hierarchy.hpp"

namespace nelson {

// Truncated N-body space: the symmetric N-particle sector over the particle
// modes tensored with the field Fock space up to `field_cap` quanta. The
// companion excitation space 𝒢_{≤N} (particle excitations 0..N, same field
// cap) hosts the image of the excitation map.
class ExactSpace {
 public:
  ExactSpace(const ModeBasis& basis, int N, int field_cap, long long max_basis = 5'000'000);

  int N() const { return N_; }
  int field_cap() const { return excitations_.n_a(); }
  const FockSpace& sector() const { return sector_; }
  const ExcitationSpace& excitations() const { return excitations_; }
  const FockSpace& field() const { return excitations_.field(); }
  int dim_p() const { return sector_.dim(); }
  int dim_a() const { return excitations_.dim_a(); }
  // row of excitations().particles() holding sector configuration i
  const std::vector<int>& sector_rows() const { return rows_; }

  MatXc zero() const { return MatXc::Zero(dim_p(), dim_a()); }
  // Rows of the N-sector state placed into the full particle Fock space.
  MatXc lift(const MatXc& psi) const;
  MatXc restrict(const MatXc& x) const;

 private:
  int N_;
  FockSpace sector_;
  ExcitationSpace excitations_;
  std::vector<int> rows_;
};

// Field cap that holds the coherent amplitude sqrt(N)·α plus n_a fluctuation
// quanta: the Poisson tail beyond it stays below `tail`.
int auto_field_cap(int N, double alpha2_max, int n_a, double tail = 1e-12);
// P(Poisson(λ) > cap)
double poisson_tail(double lambda, int cap);

// H_N = dΓ(κ) + dΓ(ω) + N^{-1/2} sum_k η_k dΓ_b(T_k) ⊗ (a_k^* + a_{-k}).
KronOperator build_nelson(const ExactSpace& space, const ModeBasis& basis);

// W(f) = exp(a^*(f) - a(f)) acting on the field factor (columns) of x.
// Throws CapacityError when the input or the result carries relative weight
// above `tail` in the two highest occupation shells below the cap.
MatXc weyl_displace(const VecXc& f, const MatXc& x, const FockSpace& field, double tail = 1e-8);

// χ = U_N Ψ: field displaced by W^*(sqrt(N) α), particle sectors
// χ^(k) = Γ(q) b(φ)^{N-k}/sqrt((N-k)!) Ψ.
MatXc excitation_map(const MatXc& psi, const ClassicalState& s, const ExactSpace& space, double tail = 1e-8);
// Ψ = U_N^* χ = W(sqrt(N) α) sum_k b^*(φ)^{N-k}/sqrt((N-k)!) χ^(k), for χ
// on `from` (any caps over the same modes; sectors above N are dropped).
MatXc excitation_map_inverse(const MatXc& chi, const ExcitationSpace& from, const ClassicalState& s,
                             const ExactSpace& space, double tail = 1e-8);
MatXc excitation_map_inverse(const MatXc& chi, const ClassicalState& s, const ExactSpace& space,
                             double tail = 1e-8);

// H(t) on 𝒢_{≤N}, the excitation Hamiltonian.
KronOperator excitation_hamiltonian(const ClassicalState& s, const ModeBasis& basis, const ExactSpace& space);

// U_N H_N U_N^* χ + i U̇_N U_N^* χ with U̇_N from a central difference of the
// map along the trajectory (step eps).
MatXc conjugated_generator(const MatXc& chi, double t, const Trajectory& traj, const ExactSpace& space,
                           const KronOperator& nelson, double eps = 1e-4);

double trace_norm(const MatXc& hermitian);

// exp(-i t H_N) Ψ by Lanczos.
MatXc evolve_exact(const MatXc& psi, const KronOperator& h, double t, double tol = 1e-12);
// RK4 with `steps` equal steps, for order checks.
MatXc evolve_exact_rk4(const MatXc& psi, const KronOperator& h, double t, int steps);

struct AssembledState {
  MatXc psi;
  double dropped_mass = 0.0;  // squared norm of the summed family outside 𝒢_{≤N}
};

// Ψ_N^{(r)} from χ_0..χ_r living on `hier`, via the inverse excitation map.
AssembledState assemble_psi_r(const ClassicalState& s, const std::vector<MatXc>& family, int r,
                              const ExcitationSpace& hier, const ExactSpace& space, double tail = 1e-8);

// One N of a convergence sweep.
struct ConvergencePoint {
  int N = 0;
  int field_cap = 0;
  long long exact_dim = 0;
  std::vector<double> errors;       // ||Ψ_N(t) - Ψ_N^{(r)}(t)||, r = 0..order
  std::vector<double> propagator;   // ||(U(t,0) - sum N^{-ℓ/2} U_ℓ(t,0)) χ||, r = 0..order
  std::vector<double> psi_r_norms;  // ||Ψ_N^{(r)}(t)||
  double density_part = 0.0;        // trace norm of μ^part(exact) - μ^part(next order)
  double density_field = 0.0;
  double initial_norm = 0.0;        // ||Ψ_N(0)||
  double dropped_mass = 0.0;
  double exact_norm_drift = 0.0;
  double seconds = 0.0;
};

struct ConvergenceSetup {
  int n_b = 6;
  int n_a = 6;
  int field_cap = 0;  // 0: auto
  int order = 2;
  double t = 0.5;
  double dt = 1e-3;
  InitialExcitation initial = InitialExcitation::vacuum;
  InitialExcitation propagator_input = InitialExcitation::two_excitation;
  long long max_basis = 5'000'000;
  double weyl_tail = 1e-8;
};

// N-independent inputs of a sweep: hierarchy family at t, the propagator
// terms U_ℓ(t,0)χ and the quasi-free two-point data with β₀₁ at t (the last
// only for a vacuum initial excitation).
struct EffectiveDynamics {
  ExcitationSpace space;
  MatXc initial;
  CorrectionFamily family;
  MatXc propagator_input;
  std::vector<MatXc> propagator_terms;
  bool has_quad = false;
  QuadState quad;
  double alpha2_max = 0.0;
};

EffectiveDynamics effective_dynamics(const Trajectory& traj, const ConvergenceSetup& setup);

ConvergencePoint convergence_point(const Trajectory& traj, const EffectiveDynamics& eff, int N,
                                   const ConvergenceSetup& setup);

// Points for every N, computed on up to `threads` workers and returned in the
// order of `Ns`.
std::vector<ConvergencePoint> convergence_sweep(const Trajectory& traj, const EffectiveDynamics& eff,
                                                const std::vector<int>& Ns, const ConvergenceSetup& setup,
                                                int threads = 1);

}  // namespace nelson

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/quad.hpp"

namespace nelson {

// Exact rational with 64-bit numerator and denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return double(num) / double(den); }
  bool operator==(const Rational&) const = default;
};

// c_n = (-1)^n binom(1/2, n), the Taylor coefficients of sqrt(1 - x).
Rational taylor_coeff(int n);

// sqrt([1 - x]_+) - sum_{n <= m} c_n x^n
double taylor_remainder(int m, double x);

// Truncated excitation space F_b ⊗ F_a: particle excitations over all particle
// modes (at most n_b quanta) and field quanta (at most n_a). Vectors are
// stored as matrices, rows indexing particle configurations and columns field
// configurations. The particle factor is the ambient Fock space over the full
// mode set; the excitation subspace is the kernel of b(φ(t)), which the
// dynamics preserves and which is measured rather than enforced.
class ExcitationSpace {
 public:
  ExcitationSpace(const ModeBasis& basis, int n_b, int n_a);

  const FockSpace& particles() const { return part_; }
  const FockSpace& field() const { return field_; }
  int n_b() const { return part_.max_total(); }
  int n_a() const { return field_.max_total(); }
  int dim_b() const { return part_.dim(); }
  int dim_a() const { return field_.dim(); }
  long long dim() const { return (long long)dim_b() * dim_a(); }
  const std::vector<int>& neg() const { return neg_; }

  const SpMat& b(int p) const { return b_[p]; }
  const SpMat& a(int k) const { return a_[k]; }
  // a_k^* + a_{-k}
  const SpMat& A(int k) const { return A_[k]; }
  const VecXd& number_b() const { return nb_; }
  const VecXd& number_a() const { return na_; }

  MatXc zero() const { return MatXc::Zero(dim_b(), dim_a()); }
  MatXc vacuum() const;

 private:
  FockSpace part_;
  FockSpace field_;
  std::vector<int> neg_;
  std::vector<SpMat> b_;
  std::vector<SpMat> a_;
  std::vector<SpMat> A_;
  VecXd nb_;
  VecXd na_;
};

// Time-dependent one-body data entering the expanded Hamiltonians.
struct FluctuationCoefficients {
  MatXc h;
  CouplingKernel kern;
  std::vector<MatXc> D;  // q T_k q - <φ, T_k φ>
  VecXd eta;
  VecXd omega;
  VecXc phi;
};

FluctuationCoefficients fluctuation_coefficients(const ClassicalState& s, const ModeBasis& basis);

// sum_k b^*(K_k) w(N_b) ⊗ (a_k^* + a_{-k}) + h.c., w given per particle configuration.
KronOperator coupling_operator(const ExcitationSpace& space, const FluctuationCoefficients& c,
                               const VecXd& weight);

KronOperator build_H0(const ExcitationSpace& space, const FluctuationCoefficients& c);
KronOperator build_H1(const ExcitationSpace& space, const FluctuationCoefficients& c);
// H_0, H_1, H_{2n} = c_n (coupling N_b^n + h.c.), and zero for odd ℓ >= 3.
KronOperator build_H_ell(int ell, const ExcitationSpace& space, const FluctuationCoefficients& c);
// H(t) with the factor [1 - N_b/N]_+^{1/2} and the N^{-1/2} H_1 term.
KronOperator build_full_H(const ExcitationSpace& space, const FluctuationCoefficients& c, int N);
KronOperator remainder_S(int r, int N, const ExcitationSpace& space, const FluctuationCoefficients& c);

// Number-operator weight (N_a + 1)^{pa} (N_b + 1)^{pb} applied entrywise.
MatXc number_weight(const ExcitationSpace& space, const MatXc& chi, double pa, double pb);

// ||(N + 1)^n χ|| with N = N_a + N_b.
double moment_report(const ExcitationSpace& space, const MatXc& chi, int n);

// ||b(φ) χ||: distance of χ from the excitation subspace orthogonal to φ.
double orthogonality_defect(const ExcitationSpace& space, const MatXc& chi, const VecXc& phi);

struct RemainderReport {
  int r = 0;
  int N = 0;
  double max_ratio = 0.0;  // largest weighted ratio; C(r) >= max_ratio * N^{(r+1)/2}
  double max_ratio_h1 = 0.0;        // first auxiliary bound
  double max_ratio_coupling = 0.0;  // second auxiliary bound, n = r
};

// Ratios ||S φ|| / ||(N_a+1)^{1/2} (N_b+1)^{(r+2)/2} φ|| over the samples, and
// the two auxiliary bounds with their own weights.
RemainderReport check_remainder_bound(int r, int N, const ExcitationSpace& space,
                                      const FluctuationCoefficients& c, const std::vector<MatXc>& samples);

// χ_0..χ_r at a common time.
struct CorrectionFamily {
  std::vector<MatXc> chi;
  double t = 0.0;
  int order() const { return int(chi.size()) - 1; }
};

// The operators H_0..H_order at one time.
std::vector<KronOperator> expanded_hamiltonians(int order, const ExcitationSpace& space,
                                                const FluctuationCoefficients& c);

// i∂χ_ℓ = H_0 χ_ℓ + sum_{m<ℓ} H_{ℓ-m} χ_m, one RK4 step. The trajectory must
// have nodes at t, t + dt/2 and t + dt.
CorrectionFamily evolve_hierarchy(const CorrectionFamily& family, const ExcitationSpace& space,
                                  const Trajectory& traj, double dt);
MatXc evolve_U0(const MatXc& chi, double t, const ExcitationSpace& space, const Trajectory& traj, double dt);
// One RK4 step of i∂χ = H(t)χ.
MatXc evolve_full(const MatXc& chi, double t, int N, const ExcitationSpace& space, const Trajectory& traj,
                  double dt);

// U_0(t,s)χ, ..., U_order(t,s)χ from the auxiliary family (χ, 0, ..., 0).
std::vector<MatXc> apply_U(int order, const MatXc& chi, double t, double s, const ExcitationSpace& space,
                           const Trajectory& traj, double dt);
MatXc apply_U_ell(int ell, const MatXc& chi, double t, double s, const ExcitationSpace& space,
                  const Trajectory& traj, double dt);

// Copies coefficients between spaces with different caps; configurations
// absent from the target are dropped.
MatXc embed(const MatXc& chi, const ExcitationSpace& from, const ExcitationSpace& to);

enum class InitialExcitation { vacuum, one_particle, two_excitation };
InitialExcitation parse_initial_excitation(const std::string& name);

// Fixed excitation inputs: Ω, b^*(ψ)Ω, or b^*(ψ) a_k^* Ω, with ψ ⊥ φ the
// normalized projection of the first particle mode not parallel to φ and k
// the first coupled field mode.
MatXc initial_excitation(InitialExcitation kind, const ExcitationSpace& space, const ModeBasis& basis,
                         const VecXc& phi);

// Random vectors for the remainder check: each concentrated on one particle
// sector (spread deterministically over 0..n_b) with random coefficients.
std::vector<MatXc> sector_samples(const ExcitationSpace& space, int count, std::mt19937_64& rng);

}  // namespace nelson

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

using Lattice = Eigen::Vector3i;

struct Tolerances {
  double norm_drift = 1e-6;          // abort an SKG or fluctuation run beyond this
  double symplectic_defect = 1e-4;   // abort a Bogoliubov-map run beyond this
  double hermiticity = 1e-10;
  double weyl_tail = 1e-8;           // coherent mass allowed beyond the field cap
  double cap_doubling = 0.10;        // relative change allowed under cap doubling
};

struct ModelConfig {
  int dimension = 1;
  double box_length = 1.0;
  std::vector<Lattice> particle_modes;
  std::vector<Lattice> field_modes;
  double mass = 1.0;
  std::vector<double> form_factor;  // g(k), one value per field mode
  VecXc initial_u;                  // momentum coefficients over particle modes
  VecXc initial_alpha;              // over field modes
  std::vector<int> n_values;
  int order = 0;
  double t_final = 1.0;
  double dt = 1e-3;
  int n_b = 4;
  int n_a = 4;
  int exact_field_cap = 0;  // 0 picks a cap from the coherent amplitude
  long long max_basis = 5'000'000;
  std::string integrator = "rk4";  // rk4 | split
  Tolerances tol;
};

// Throws PreconditionError naming the violated invariant.
void validate(const ModelConfig& config);

// Plane-wave discretization: momenta k = n / L, kinetic (2π|k|)^2,
// dispersion sqrt(|k|^2 + m^2), coupling η = g / sqrt(2ω).
struct ModeBasis {
  int dimension = 1;
  double box_length = 1.0;
  double mass = 1.0;
  std::vector<Lattice> particle_index;
  std::vector<Lattice> field_index;
  MatXd particle_momenta;  // dimension x n_p
  MatXd field_momenta;     // dimension x n_f
  VecXd kappa;
  VecXd omega;
  VecXd g;
  VecXd eta;
  std::vector<int> neg;                 // field index of -k
  std::vector<std::vector<int>> shift;  // shift[k][p] = index of p - k, or -1

  int n_p() const { return int(kappa.size()); }
  int n_f() const { return int(omega.size()); }
};

ModeBasis build_basis(const ModelConfig& config);

// Multiplication by e^{-2πik·x} projected onto the particle modes:
// T_k e_p = e_{p-k}. T_k^* = T_{-k}.
MatXc shift_matrix(const ModeBasis& basis, int k);

// Fourier transform between point values on a rank-1 lattice grid of the box
// and coefficients over a mode set, f̂(k) = ∫ e^{-2πik·x} f(x) dx.
class FourierPair {
 public:
  FourierPair(int dimension, double box_length, const std::vector<Lattice>& modes);

  int size() const { return int(grid_.cols()); }
  const MatXd& grid() const { return grid_; }
  VecXc forward(const VecXc& values) const;
  VecXc inverse(const VecXc& coefficients) const;

 private:
  int dimension_;
  double volume_;
  MatXd grid_;
  MatXc forward_;
  Eigen::PartialPivLU<MatXc> lu_;
};

// Parsed run configuration file. Sections [model], [run], [truncation];
// lines are `key = value`, `#` starts a comment.
struct RunConfig {
  ModelConfig model;
  std::string kind = "skg-only";
  std::uint64_t seed = 1;
  std::string initial_excitation = "vacuum";  // vacuum | one-particle | two-excitation
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace nelson

#pragma once

#include <vector>

#include "nelson/model.hpp"

namespace nelson {

// Mean-field degrees of freedom. u holds momentum coefficients; theta is the
// accumulated gauge phase, so that φ = e^{iθ} u solves i∂φ = h(t)φ.
struct ClassicalState {
  VecXc u;
  VecXc alpha;
  double theta = 0.0;
  double t = 0.0;

  VecXc phi() const { return std::polar(1.0, theta) * u; }
};

ClassicalState initial_state(const ModelConfig& config, const ModeBasis& basis);

// ρ̂(k) = ∫ e^{-2πik·x} |u|^2, evaluated as the exact mode convolution.
VecXc density_hat(const ModeBasis& basis, const VecXc& u);

// Φ as a matrix on the particle modes, sum_k η_k (conj α_k + α_{-k}) T_k.
MatXc field_matrix(const ModeBasis& basis, const VecXc& alpha);

// Φ(x) on the grid of `grid`; real up to rounding.
VecXc classical_field(const VecXc& alpha, const ModeBasis& basis, const FourierPair& grid);

// μ = ½ ∫ Φ |u|^2, the instantaneous rate of the gauge phase.
double phase_rate(const ModeBasis& basis, const ClassicalState& s);

// h(t) = -Δ + Φ(t) - μ(t) on the particle modes.
MatXc one_body_h(const ModeBasis& basis, const ClassicalState& s);

double skg_energy(const ModeBasis& basis, const ClassicalState& s);

// Time derivative of (u, α, θ).
struct SkgRate {
  VecXc du;
  VecXc dalpha;
  double dtheta;
};
SkgRate skg_rate(const ModeBasis& basis, const ClassicalState& s);

enum class SkgIntegrator { rk4, split };
SkgIntegrator parse_integrator(const std::string& name);

ClassicalState skg_step(const ModeBasis& basis, const ClassicalState& s, double dt,
                        SkgIntegrator method = SkgIntegrator::rk4);

// SKG solution stored on a uniform grid of spacing `spacing`. Queries between
// nodes take a partial step from the preceding node.
class Trajectory {
 public:
  Trajectory(const ModeBasis& basis, ClassicalState initial, double t_final, double spacing,
             SkgIntegrator method = SkgIntegrator::rk4, double norm_tolerance = 1e-6);

  const ModeBasis& basis() const { return basis_; }
  double spacing() const { return spacing_; }
  double t_final() const { return t_final_; }
  const std::vector<ClassicalState>& nodes() const { return nodes_; }
  ClassicalState at(double t) const;

 private:
  ModeBasis basis_;
  double spacing_;
  double t_final_;
  SkgIntegrator method_;
  std::vector<ClassicalState> nodes_;
};

}  // namespace nelson

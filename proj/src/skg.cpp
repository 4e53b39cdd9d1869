#include "nelson/skg.hpp"

#include <algorithm>
#include <cmath>

#include "nelson/propagate.hpp"

namespace nelson {

ClassicalState initial_state(const ModelConfig& c, const ModeBasis& b) {
  ClassicalState s;
  if (c.initial_u.size()) {
    s.u = c.initial_u;
  } else {
    s.u = VecXc::Zero(b.n_p());
    s.u[0] = 1.0;
  }
  const double n = s.u.norm();
  if (n == 0.0) throw PreconditionError("initial_u is zero");
  s.u /= n;
  s.alpha = c.initial_alpha.size() ? c.initial_alpha : VecXc(VecXc::Zero(b.n_f()));
  return s;
}

VecXc density_hat(const ModeBasis& b, const VecXc& u) {
  VecXc rho = VecXc::Zero(b.n_f());
  for (int k = 0; k < b.n_f(); ++k)
    for (int p = 0; p < b.n_p(); ++p)
      if (int q = b.shift[k][p]; q >= 0) rho[k] += std::conj(u[q]) * u[p];
  return rho;
}

MatXc field_matrix(const ModeBasis& b, const VecXc& alpha) {
  MatXc m = MatXc::Zero(b.n_p(), b.n_p());
  for (int k = 0; k < b.n_f(); ++k) {
    if (b.eta[k] == 0.0) continue;
    const cplx c = b.eta[k] * (std::conj(alpha[k]) + alpha[b.neg[k]]);
    for (int p = 0; p < b.n_p(); ++p)
      if (int q = b.shift[k][p]; q >= 0) m(q, p) += c;
  }
  return m;
}

VecXc classical_field(const VecXc& alpha, const ModeBasis& b, const FourierPair& grid) {
  if (alpha.size() != b.n_f()) throw PreconditionError("classical_field: alpha shape mismatch");
  const MatXd& x = grid.grid();
  VecXc phi = VecXc::Zero(x.cols());
  for (int k = 0; k < b.n_f(); ++k) {
    const cplx c = b.eta[k] * (std::conj(alpha[k]) + alpha[b.neg[k]]);
    for (int j = 0; j < x.cols(); ++j)
      phi[j] += c * std::polar(1.0, -2.0 * M_PI * b.field_momenta.col(k).dot(x.col(j)));
  }
  return phi;
}

double phase_rate(const ModeBasis& b, const ClassicalState& s) {
  return 0.5 * s.u.dot(field_matrix(b, s.alpha) * s.u).real();
}

MatXc one_body_h(const ModeBasis& b, const ClassicalState& s) {
  MatXc h = field_matrix(b, s.alpha);
  h.diagonal() += b.kappa.cast<cplx>();
  h.diagonal().array() -= phase_rate(b, s);
  return h;
}

double skg_energy(const ModeBasis& b, const ClassicalState& s) {
  const VecXc rho = density_hat(b, s.u);
  double e = (b.kappa.array() * s.u.array().abs2()).sum();
  e += (b.omega.array() * s.alpha.array().abs2()).sum();
  e += 2.0 * s.alpha.dot(b.eta.cast<cplx>().cwiseProduct(rho)).real();
  return e;
}

SkgRate skg_rate(const ModeBasis& b, const ClassicalState& s) {
  const MatXc m = field_matrix(b, s.alpha);
  SkgRate r;
  r.du = -I * (b.kappa.cast<cplx>().cwiseProduct(s.u) + m * s.u);
  r.dalpha = -I * (b.omega.cast<cplx>().cwiseProduct(s.alpha) +
                   b.eta.cast<cplx>().cwiseProduct(density_hat(b, s.u)));
  r.dtheta = 0.5 * s.u.dot(m * s.u).real();
  return r;
}

SkgIntegrator parse_integrator(const std::string& name) {
  if (name == "rk4") return SkgIntegrator::rk4;
  if (name == "split") return SkgIntegrator::split;
  throw PreconditionError("unknown integrator '" + name + "'");
}

namespace {

// (u, α, θ) packed as one vector so the generic RK4 applies.
VecXc pack(const ClassicalState& s) {
  VecXc y(s.u.size() + s.alpha.size() + 1);
  y << s.u, s.alpha, cplx(s.theta);
  return y;
}

ClassicalState unpack(const VecXc& y, int np, int nf, double t) {
  ClassicalState s;
  s.u = y.head(np);
  s.alpha = y.segment(np, nf);
  s.theta = y[np + nf].real();
  s.t = t;
  return s;
}

ClassicalState split_step(const ModeBasis& b, const ClassicalState& s, double dt) {
  ClassicalState r = s;
  auto free_flow = [&](double tau) {
    r.u = (b.kappa.cast<cplx>() * (-I * tau)).array().exp().matrix().cwiseProduct(r.u);
    r.alpha = (b.omega.cast<cplx>() * (-I * tau)).array().exp().matrix().cwiseProduct(r.alpha);
  };
  auto particle_kick = [&](double tau) {
    Eigen::SelfAdjointEigenSolver<MatXc> es(field_matrix(b, r.alpha));
    r.u = es.eigenvectors() *
          (es.eigenvalues().cast<cplx>() * (-I * tau)).array().exp().matrix().asDiagonal() *
          (es.eigenvectors().adjoint() * r.u);
  };
  auto field_kick = [&](double tau) {
    r.alpha -= I * tau * b.eta.cast<cplx>().cwiseProduct(density_hat(b, r.u));
  };
  const double mu0 = phase_rate(b, r);
  free_flow(0.5 * dt);
  particle_kick(0.5 * dt);
  field_kick(dt);
  particle_kick(0.5 * dt);
  free_flow(0.5 * dt);
  r.theta += 0.5 * dt * (mu0 + phase_rate(b, r));
  r.t = s.t + dt;
  return r;
}

}  // namespace

ClassicalState skg_step(const ModeBasis& b, const ClassicalState& s, double dt, SkgIntegrator method) {
  if (method == SkgIntegrator::split) return split_step(b, s, dt);
  const int np = b.n_p(), nf = b.n_f();
  auto f = [&](double t, const VecXc& y) {
    SkgRate r = skg_rate(b, unpack(y, np, nf, t));
    VecXc out(y.size());
    out << r.du, r.dalpha, cplx(r.dtheta);
    return out;
  };
  return unpack(rk4_step(pack(s), s.t, dt, f), np, nf, s.t + dt);
}

Trajectory::Trajectory(const ModeBasis& basis, ClassicalState initial, double t_final, double spacing,
                       SkgIntegrator method, double norm_tolerance)
    : basis_(basis), spacing_(spacing), t_final_(t_final), method_(method) {
  if (!(spacing > 0) || t_final < 0) throw PreconditionError("Trajectory: invalid time grid");
  const int steps = int(std::ceil(t_final / spacing - 1e-9));
  const double n0 = initial.u.norm();
  nodes_.reserve(steps + 1);
  initial.t = 0.0;
  nodes_.push_back(std::move(initial));
  for (int j = 1; j <= steps; ++j) {
    ClassicalState next = skg_step(basis_, nodes_.back(), spacing, method_);
    next.t = j * spacing;
    if (std::abs(next.u.norm() - n0) > norm_tolerance)
      throw InvariantError("SKG norm drift " + std::to_string(std::abs(next.u.norm() - n0)) +
                           " at t = " + std::to_string(next.t));
    nodes_.push_back(std::move(next));
  }
}

ClassicalState Trajectory::at(double t) const {
  if (t < -1e-12 || t > t_final_ + spacing_ * 1e-6 + 1e-12)
    throw PreconditionError("Trajectory: time outside the integrated window");
  int j = int(std::floor(t / spacing_ + 1e-7));
  j = std::clamp(j, 0, int(nodes_.size()) - 1);
  const double rest = t - j * spacing_;
  if (std::abs(rest) <= 1e-9 * spacing_) return nodes_[j];
  ClassicalState s = skg_step(basis_, nodes_[j], rest, method_);
  s.t = t;
  return s;
}

}  // namespace nelson

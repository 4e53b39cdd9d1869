#include "nelson/quad.hpp"

#include <array>
#include <cmath>

#include "nelson/propagate.hpp"

namespace nelson {

namespace {

double spectral_norm(const MatXc& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatXc>(m).singularValues()[0];
}

}  // namespace

CouplingKernel build_coupling(const VecXc& phi, const ModeBasis& b, double norm_tol) {
  if (std::abs(phi.norm() - 1.0) > norm_tol) throw PreconditionError("build_coupling: φ is not normalized");
  CouplingKernel c;
  const int np = b.n_p(), nf = b.n_f();
  c.q = MatXc::Identity(np, np) - phi * phi.adjoint();
  c.Ktilde.resize(nf, np);
  for (int k = 0; k < nf; ++k) c.Ktilde.row(k) = (b.eta[k] * (shift_matrix(b, k) * phi)).transpose();
  c.K = c.Ktilde * c.q.transpose();
  c.Kminus.resize(nf, np);
  for (int k = 0; k < nf; ++k) c.Kminus.row(k) = c.K.row(b.neg[k]);
  return c;
}

std::vector<MatXc> fluctuation_kernels(const VecXc& phi, const ModeBasis& b) {
  const MatXc q = MatXc::Identity(b.n_p(), b.n_p()) - phi * phi.adjoint();
  std::vector<MatXc> d(b.n_f());
  for (int k = 0; k < b.n_f(); ++k) {
    const MatXc t = shift_matrix(b, k);
    d[k] = q * t * q;
    d[k].diagonal().array() -= phi.dot(t * phi);
  }
  return d;
}

BlockPair build_blocks(const ClassicalState& s, const ModeBasis& b, const CouplingKernel& kern) {
  const int np = b.n_p(), nf = b.n_f(), n = np + nf;
  BlockPair ab;
  ab.A = MatXc::Zero(n, n);
  ab.A.topLeftCorner(np, np) = one_body_h(b, s);
  ab.A.topRightCorner(np, nf) = kern.Kminus.transpose();
  ab.A.bottomLeftCorner(nf, np) = kern.Kminus.conjugate();
  ab.A.bottomRightCorner(nf, nf).diagonal() = b.omega.cast<cplx>();
  ab.B = MatXc::Zero(n, n);
  ab.B.topRightCorner(np, nf) = kern.K.transpose();
  ab.B.bottomLeftCorner(nf, np) = kern.K;
  return ab;
}

BlockPair build_blocks(const ClassicalState& s, const ModeBasis& b) {
  return build_blocks(s, b, build_coupling(s.phi(), b));
}

MatXc generator(const BlockPair& ab) {
  const int n = int(ab.A.rows());
  MatXc g(2 * n, 2 * n);
  g << ab.A, -ab.B, ab.B.conjugate(), -ab.A.conjugate();
  return g;
}

CouplingBounds coupling_bounds(const ClassicalState& s, const ModeBasis& b, const FourierPair& grid) {
  CouplingBounds r;
  const double eta = b.eta.norm(), alpha = s.alpha.norm();
  r.field_sup = classical_field(s.alpha, b, grid).cwiseAbs().maxCoeff();
  r.field_bound = 2.0 * eta * alpha;
  r.mu_abs = std::abs(phase_rate(b, s));
  r.mu_bound = eta * alpha;
  r.kernel_hs = build_coupling(s.phi(), b).K.norm();
  r.kernel_bound = 2.0 * eta;
  return r;
}

BogMap BogMap::identity(int n, double t0) {
  return {MatXc::Identity(n, n), MatXc::Zero(n, n), t0, t0};
}

MatXc BogMap::full() const {
  const int n = int(u.rows());
  MatXc m(2 * n, 2 * n);
  m << u, v.conjugate(), v, u.conjugate();
  return m;
}

MatXc symplectic_form(int n) {
  MatXc s = MatXc::Identity(2 * n, 2 * n);
  s.bottomRightCorner(n, n) *= -1.0;
  return s;
}

BogMap evolve_bog_map(const BogMap& map, const std::function<MatXc(double)>& gen, double dt) {
  const int n = int(map.u.rows());
  MatXc y(2 * n, n);
  y << map.u, map.v;
  auto f = [&](double t, const MatXc& x) -> MatXc { return -I * (gen(t) * x); };
  y = rk4_step(y, map.t, dt, f);
  return {y.topRows(n), y.bottomRows(n), map.t + dt, map.t0};
}

BogMap evolve_bog_map(const BogMap& map, const Trajectory& traj, double dt) {
  return evolve_bog_map(map, [&](double t) { return generator(build_blocks(traj.at(t), traj.basis())); }, dt);
}

double check_symplectic(const BogMap& map) {
  const MatXc v = map.full(), s = symplectic_form(int(map.u.rows()));
  return std::max(spectral_norm(v.adjoint() * s * v - s), spectral_norm(v * s * v.adjoint() - s));
}

double block_conditions_defect(const BogMap& m) {
  const int n = int(m.u.rows());
  const MatXc one = MatXc::Identity(n, n), ub = m.u.conjugate(), vb = m.v.conjugate();
  return std::max({spectral_norm(m.u.adjoint() * m.u - one - m.v.adjoint() * m.v),
                   spectral_norm(m.u * m.u.adjoint() - one - vb * vb.adjoint()),
                   spectral_norm(m.u.adjoint() * vb - m.v.adjoint() * ub),
                   spectral_norm(m.u * m.v.adjoint() - vb * ub.adjoint())});
}

double shale_stinespring(const BogMap& map) { return map.v.squaredNorm(); }

VecXc transform_observable(const BogMap& map, const VecXc& F) {
  if (F.size() != 2 * map.u.rows()) throw PreconditionError("transform_observable: shape mismatch");
  return map.full() * F;
}

GeneralizedDensity GeneralizedDensity::vacuum(int n, double t) {
  GeneralizedDensity g;
  g.gamma = MatXc::Zero(2 * n, 2 * n);
  g.gamma.bottomRightCorner(n, n).setIdentity();
  g.t = t;
  return g;
}

GeneralizedDensity evolve_gamma(const GeneralizedDensity& g, const std::function<MatXc(double)>& gen,
                                double dt) {
  auto f = [&](double t, const MatXc& x) -> MatXc {
    const MatXc a = gen(t);
    return -I * (a.adjoint() * x - x * a);
  };
  return {rk4_step(g.gamma, g.t, dt, f), g.t + dt};
}

GeneralizedDensity evolve_gamma(const GeneralizedDensity& g, const Trajectory& traj, double dt) {
  return evolve_gamma(g, [&](double t) { return generator(build_blocks(traj.at(t), traj.basis())); }, dt);
}

GeneralizedDensity conjugate_gamma(const GeneralizedDensity& g0, const BogMap& map) {
  const MatXc s = symplectic_form(int(map.u.rows()));
  const MatXc svs = s * map.full() * s;
  return {svs * g0.gamma * svs.adjoint(), map.t};
}

OnePointPair beta01_rhs(const OnePointPair& beta, const ClassicalState& s, const ModeBasis& b,
                        const GeneralizedDensity& g) {
  const int np = b.n_p(), nf = b.n_f(), n2 = np + nf;
  const VecXc phi = s.phi();
  const CouplingKernel kern = build_coupling(phi, b);
  const std::vector<MatXc> d = fluctuation_kernels(phi, b);
  const MatXc& G = g.gamma;
  OnePointPair r;
  r.t = beta.t;
  r.part = one_body_h(b, s) * beta.part + kern.K.transpose() * beta.field.conjugate() +
           kern.Kminus.transpose() * beta.field;
  r.field = b.omega.cast<cplx>().cwiseProduct(beta.field) + kern.K * beta.part.conjugate() +
            kern.Kminus.conjugate() * beta.part;
  for (int k = 0; k < nf; ++k) {
    if (b.eta[k] == 0.0) continue;
    // <(a_k^* + a_{-k}) b_y> for all y
    VecXc mixed(np);
    for (int y = 0; y < np; ++y) mixed[y] = G(y, np + k) + G(y, n2 + np + b.neg[k]);
    r.part += b.eta[k] * (d[k] * mixed);
    // sum_xy D_k[x][y] <b_x^* b_y>, with <b_x^* b_y> = Γ(y, x)
    r.field[k] += b.eta[k] * (d[k].cwiseProduct(G.topLeftCorner(np, np).transpose())).sum();
  }
  return r;
}

namespace {

OnePointPair axpy(const OnePointPair& y, cplx a, const OnePointPair& x) {
  return {y.part + a * x.part, y.field + a * x.field, y.t};
}

}  // namespace

OnePointPair evolve_beta01(const OnePointPair& beta, const ModeBasis& b,
                           const std::array<ClassicalState, 3>& st,
                           const std::array<GeneralizedDensity, 3>& ga, double dt) {
  auto f = [&](const OnePointPair& y, int i) {
    OnePointPair r = beta01_rhs(y, st[i], b, ga[i]);
    r.part *= -I;
    r.field *= -I;
    return r;
  };
  const OnePointPair k1 = f(beta, 0);
  const OnePointPair k2 = f(axpy(beta, 0.5 * dt, k1), 1);
  const OnePointPair k3 = f(axpy(beta, 0.5 * dt, k2), 1);
  const OnePointPair k4 = f(axpy(beta, dt, k3), 2);
  OnePointPair out = beta;
  out.part += dt / 6.0 * (k1.part + 2.0 * k2.part + 2.0 * k3.part + k4.part);
  out.field += dt / 6.0 * (k1.field + 2.0 * k2.field + 2.0 * k3.field + k4.field);
  out.t = beta.t + dt;
  return out;
}

QuadState quad_initial(const ModeBasis& b, const GeneralizedDensity& gamma0) {
  QuadState s;
  s.map = BogMap::identity(b.n_p() + b.n_f(), gamma0.t);
  s.gamma = gamma0;
  s.beta = {VecXc::Zero(b.n_p()), VecXc::Zero(b.n_f()), gamma0.t};
  return s;
}

QuadState quad_step(const QuadState& s, const Trajectory& traj, double dt) {
  const ModeBasis& b = traj.basis();
  const int n2 = b.n_p() + b.n_f(), np = b.n_p(), nf = b.n_f();
  const long gsz = 4L * n2 * n2;
  // packed as [u; v] columns, then vec(Γ), then β
  auto pack = [&](const QuadState& q) {
    VecXc y(2L * n2 * n2 + gsz + np + nf);
    MatXc uv(2 * n2, n2);
    uv << q.map.u, q.map.v;
    y << vec(uv), vec(q.gamma.gamma), q.beta.part, q.beta.field;
    return y;
  };
  auto f = [&](double t, const VecXc& y) -> VecXc {
    const ClassicalState cs = traj.at(t);
    const MatXc a = generator(build_blocks(cs, b));
    const MatXc uv = unvec(y.head(2L * n2 * n2), 2 * n2, n2);
    GeneralizedDensity g{unvec(y.segment(2L * n2 * n2, gsz), 2 * n2, 2 * n2), t};
    OnePointPair beta{y.segment(2L * n2 * n2 + gsz, np), y.tail(nf), t};
    const OnePointPair rb = beta01_rhs(beta, cs, b, g);
    VecXc out(y.size());
    out << vec(-I * (a * uv)), vec(-I * (a.adjoint() * g.gamma - g.gamma * a)), -I * rb.part, -I * rb.field;
    return out;
  };
  const VecXc y = rk4_step(pack(s), s.map.t, dt, f);
  QuadState r;
  const MatXc uv = unvec(y.head(2L * n2 * n2), 2 * n2, n2);
  r.map = {uv.topRows(n2), uv.bottomRows(n2), s.map.t + dt, s.map.t0};
  r.gamma = {unvec(y.segment(2L * n2 * n2, gsz), 2 * n2, 2 * n2), s.gamma.t + dt};
  r.beta = {y.segment(2L * n2 * n2 + gsz, np), y.tail(nf), s.beta.t + dt};
  return r;
}

}  // namespace nelson

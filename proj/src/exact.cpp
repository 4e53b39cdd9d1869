#include "nelson/exact.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "nelson/densities.hpp"
#include "nelson/propagate.hpp"

namespace nelson {

ExactSpace::ExactSpace(const ModeBasis& basis, int N, int field_cap, long long max_basis)
    : N_(N),
      sector_(basis.n_p(), N, N),
      excitations_(basis, std::max(N, 0), std::max(field_cap, 0)) {
  if (N < 1) throw PreconditionError("ExactSpace: N must be positive");
  if (field_cap < 0) throw PreconditionError("ExactSpace: negative field cap");
  const long long d = fock_window_size(basis.n_p(), N, N) * fock_window_size(basis.n_f(), 0, field_cap);
  if (d > max_basis)
    throw CapacityError("exact basis of dimension " + std::to_string(d) + " exceeds the guard " +
                        std::to_string(max_basis));
  rows_.resize(sector_.dim());
  for (int i = 0; i < sector_.dim(); ++i) rows_[i] = excitations_.particles().find(sector_.config(i));
}

MatXc ExactSpace::lift(const MatXc& psi) const {
  MatXc x = excitations_.zero();
  for (int i = 0; i < dim_p(); ++i) x.row(rows_[i]) = psi.row(i);
  return x;
}

MatXc ExactSpace::restrict(const MatXc& x) const {
  MatXc psi(dim_p(), dim_a());
  for (int i = 0; i < dim_p(); ++i) psi.row(i) = x.row(rows_[i]);
  return psi;
}

double poisson_tail(double lambda, int cap) {
  if (lambda <= 0.0) return 0.0;
  // sum the tail directly; the head sum loses everything to cancellation
  double term = std::exp(-lambda), head = 0.0;
  for (int n = 0; n <= cap; ++n) {
    head += term;
    term *= lambda / (n + 1);
  }
  double tail = 0.0;
  for (int n = cap + 1; n < cap + 400; ++n) {
    tail += term;
    term *= lambda / (n + 1);
    if (term < 1e-300 || term < 1e-18 * tail) break;
  }
  return std::min(tail, std::max(0.0, 1.0 - head));
}

int auto_field_cap(int N, double alpha2_max, int n_a, double tail) {
  const double lambda = N * alpha2_max;
  int m = 0;
  while (poisson_tail(lambda, m) > tail) ++m;
  return n_a + m;
}

KronOperator build_nelson(const ExactSpace& sp, const ModeBasis& b) {
  KronOperator op(sp.dim_p(), sp.dim_a());
  op.add_left(1.0, sp.sector().one_body(b.kappa.cast<cplx>().asDiagonal().toDenseMatrix()));
  op.add_right(1.0, sp.field().one_body(b.omega.cast<cplx>().asDiagonal().toDenseMatrix()));
  const double scale = 1.0 / std::sqrt(double(sp.N()));
  for (int k = 0; k < b.n_f(); ++k) {
    if (b.eta[k] == 0.0) continue;
    op.add(b.eta[k] * scale, sp.sector().one_body(shift_matrix(b, k)), sp.excitations().A(k));
  }
  return op;
}

namespace {

// Relative weight of the top two occupation shells: a displaced state that
// reaches the cap is no longer represented faithfully.
double top_shell_mass(const MatXc& x, const FockSpace& field) {
  const double total = x.squaredNorm();
  if (total == 0.0) return 0.0;
  double top = 0.0;
  for (int j = 0; j < field.dim(); ++j)
    if (field.total(j) >= field.max_total() - 1) top += x.col(j).squaredNorm();
  return top / total;
}

}  // namespace

MatXc weyl_displace(const VecXc& f, const MatXc& x, const FockSpace& field, double tail) {
  if (x.cols() != field.dim()) throw PreconditionError("weyl_displace: field dimension mismatch");
  const double f2 = f.squaredNorm();
  if (f2 == 0.0) return x;
  const SpMat gt = SpMat(field.creator(f) - field.annihilator(f)).transpose();
  const double bound = 2.0 * std::sqrt(f2) * std::sqrt(double(field.max_total()) + 1.0);
  MatXc y = expmv_taylor([&](const MatXc& v) -> MatXc { return v * gt; }, x, 1.0, bound);
  if (tail < 1.0) {
    const double top = std::max(top_shell_mass(x, field), top_shell_mass(y, field));
    if (top > tail) {
      std::ostringstream msg;
      msg << "weyl_displace: relative weight " << top << " in the top field shells exceeds " << tail;
      throw CapacityError(msg.str());
    }
  }
  return y;
}

namespace {

// Dense blocks of b(φ) between particle-number sectors k and k-1, and the
// projector Γ(q) on each sector.
struct SectorBlocks {
  std::vector<std::vector<int>> rows;  // rows of the particle space per sector
  std::vector<MatXc> lower;            // b(φ): sector k -> k-1
  std::vector<MatXc> raise;            // b^*(φ): sector k-1 -> k
  std::vector<MatXc> projector;        // Γ(q) on sector k
};

MatXc block(const SpMat& m, const std::vector<int>& r, const std::vector<int>& c) {
  std::vector<int> rpos(m.rows(), -1), cpos(m.cols(), -1);
  for (std::size_t i = 0; i < r.size(); ++i) rpos[r[i]] = int(i);
  for (std::size_t j = 0; j < c.size(); ++j) cpos[c[j]] = int(j);
  MatXc out = MatXc::Zero(r.size(), c.size());
  for (int col = 0; col < m.outerSize(); ++col)
    for (SpMat::InnerIterator it(m, col); it; ++it)
      if (rpos[it.row()] >= 0 && cpos[it.col()] >= 0) out(rpos[it.row()], cpos[it.col()]) = it.value();
  return out;
}

SectorBlocks sector_blocks(const FockSpace& part, const VecXc& phi, int N) {
  SectorBlocks s;
  for (int k = 0; k <= N; ++k) s.rows.push_back(part.sector(k));
  const SpMat b = part.annihilator(phi);
  const SpMat n = SpMat(b.adjoint()) * b;
  s.lower.resize(N + 1);
  s.raise.resize(N + 1);
  s.projector.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    if (k > 0) {
      s.lower[k] = block(b, s.rows[k - 1], s.rows[k]);
      s.raise[k] = s.lower[k].adjoint();
    }
    // projector onto n_φ = 0 as prod_{j=k..1} (1 - n_φ/j); descending j keeps
    // every intermediate eigencomponent bounded by one
    const MatXc nk = block(n, s.rows[k], s.rows[k]);
    const int d = int(s.rows[k].size());
    MatXc p = MatXc::Identity(d, d);
    for (int j = k; j >= 1; --j) p = (MatXc::Identity(d, d) - nk / double(j)) * p;
    s.projector[k] = std::move(p);
  }
  return s;
}

void check_phi(const VecXc& phi) {
  if (std::abs(phi.norm() - 1.0) > 1e-8) throw PreconditionError("excitation map: φ is not normalized");
}

}  // namespace

MatXc excitation_map(const MatXc& psi, const ClassicalState& s, const ExactSpace& sp, double tail) {
  if (psi.rows() != sp.dim_p() || psi.cols() != sp.dim_a())
    throw PreconditionError("excitation_map: state shape mismatch");
  const VecXc phi = s.phi();
  check_phi(phi);
  const int N = sp.N();
  const MatXc displaced = weyl_displace(-std::sqrt(double(N)) * s.alpha, psi, sp.field(), tail);
  const SectorBlocks blk = sector_blocks(sp.excitations().particles(), phi, N);
  // x_k = b(φ)^{N-k} Ψ / sqrt((N-k)!), carried down from sector N
  MatXc x(blk.rows[N].size(), sp.dim_a());
  for (int i = 0; i < sp.dim_p(); ++i) {
    const auto it = std::find(blk.rows[N].begin(), blk.rows[N].end(), sp.sector_rows()[i]);
    x.row(it - blk.rows[N].begin()) = displaced.row(i);
  }
  MatXc chi = sp.excitations().zero();
  for (int k = N; k >= 0; --k) {
    const MatXc part = blk.projector[k] * x;
    for (std::size_t i = 0; i < blk.rows[k].size(); ++i) chi.row(blk.rows[k][i]) = part.row(i);
    if (k > 0) x = blk.lower[k] * x / std::sqrt(double(N - k + 1));
  }
  return chi;
}

MatXc excitation_map_inverse(const MatXc& chi, const ExcitationSpace& from, const ClassicalState& s,
                             const ExactSpace& sp, double tail) {
  if (chi.rows() != from.dim_b() || chi.cols() != from.dim_a())
    throw PreconditionError("excitation_map_inverse: state shape mismatch");
  if (from.particles().modes() != sp.sector().modes() || from.field().modes() != sp.field().modes())
    throw PreconditionError("excitation_map_inverse: mode sets differ");
  const VecXc phi = s.phi();
  check_phi(phi);
  const int N = sp.N();
  const FockSpace& part = sp.excitations().particles();
  const SectorBlocks blk = sector_blocks(part, phi, N);
  // sector-k rows of χ in the block ordering
  std::vector<int> pos(part.dim(), -1);
  for (int k = 0; k <= N; ++k)
    for (std::size_t i = 0; i < blk.rows[k].size(); ++i) pos[blk.rows[k][i]] = int(i);
  std::vector<MatXc> sec(N + 1);
  for (int k = 0; k <= N; ++k) sec[k] = MatXc::Zero(blk.rows[k].size(), from.dim_a());
  for (int i = 0; i < from.dim_b(); ++i) {
    const int k = from.particles().total(i);
    if (k > N) continue;
    sec[k].row(pos[part.find(from.particles().config(i))]) = chi.row(i);
  }
  // acc_k = b^*(φ) acc_{k-1} / sqrt(N-k+1) + χ^(k), ending at sector N
  MatXc acc = sec[0];
  for (int k = 1; k <= N; ++k) acc = blk.raise[k] * acc / std::sqrt(double(N - k + 1)) + sec[k];
  MatXc psi = MatXc::Zero(sp.dim_p(), sp.dim_a());
  std::vector<int> cols(from.dim_a());
  for (int j = 0; j < from.dim_a(); ++j) cols[j] = sp.field().find(from.field().config(j));
  for (int i = 0; i < sp.dim_p(); ++i) {
    const int r = pos[sp.sector_rows()[i]];
    for (int j = 0; j < from.dim_a(); ++j)
      if (cols[j] >= 0) psi(i, cols[j]) = acc(r, j);
  }
  return weyl_displace(std::sqrt(double(N)) * s.alpha, psi, sp.field(), tail);
}

MatXc excitation_map_inverse(const MatXc& chi, const ClassicalState& s, const ExactSpace& sp, double tail) {
  return excitation_map_inverse(chi, sp.excitations(), s, sp, tail);
}

KronOperator excitation_hamiltonian(const ClassicalState& s, const ModeBasis& b, const ExactSpace& sp) {
  return build_full_H(sp.excitations(), fluctuation_coefficients(s, b), sp.N());
}

MatXc conjugated_generator(const MatXc& chi, double t, const Trajectory& traj, const ExactSpace& sp,
                           const KronOperator& nelson, double eps) {
  const ClassicalState s = traj.at(t);
  const MatXc psi = excitation_map_inverse(chi, s, sp, 1.0);
  const MatXc conj = excitation_map(nelson.apply(psi), s, sp, 1.0);
  auto quotient = [&](double h) -> MatXc {
    return (excitation_map(psi, traj.at(t + h), sp, 1.0) - excitation_map(psi, traj.at(t - h), sp, 1.0)) /
           (2.0 * h);
  };
  // central differences are second order; one Richardson step removes h^2
  const MatXc dot = (4.0 * quotient(0.5 * eps) - quotient(eps)) / 3.0;
  return conj + I * dot;
}

double trace_norm(const MatXc& m) {
  return Eigen::SelfAdjointEigenSolver<MatXc>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().sum();
}

MatXc evolve_exact(const MatXc& psi, const KronOperator& h, double t, double tol) {
  return expmv_krylov([&](const MatXc& x) -> MatXc { return h.apply(x); }, psi, t, tol);
}

MatXc evolve_exact_rk4(const MatXc& psi, const KronOperator& h, double t, int steps) {
  if (steps < 1) throw PreconditionError("evolve_exact_rk4: steps must be positive");
  const double dt = t / steps;
  MatXc y = psi;
  for (int j = 0; j < steps; ++j)
    y = rk4_step(y, j * dt, dt, [&](double, const MatXc& x) -> MatXc { return -I * h.apply(x); });
  return y;
}

AssembledState assemble_psi_r(const ClassicalState& s, const std::vector<MatXc>& family, int r,
                              const ExcitationSpace& hier, const ExactSpace& sp, double tail) {
  if (r < 0 || r >= int(family.size())) throw PreconditionError("assemble_psi_r: order outside the family");
  MatXc sum = hier.zero();
  for (int l = 0; l <= r; ++l) sum += std::pow(double(sp.N()), -0.5 * l) * family[l];
  AssembledState out;
  for (int i = 0; i < hier.dim_b(); ++i)
    for (int j = 0; j < hier.dim_a(); ++j)
      if (hier.particles().total(i) > sp.N() || hier.field().total(j) > sp.field_cap())
        out.dropped_mass += std::norm(sum(i, j));
  out.psi = excitation_map_inverse(sum, hier, s, sp, tail);
  return out;
}

EffectiveDynamics effective_dynamics(const Trajectory& traj, const ConvergenceSetup& setup) {
  const ModeBasis& b = traj.basis();
  const int steps = int(std::lround(setup.t / setup.dt));
  if (steps < 1 || std::abs(steps * setup.dt - setup.t) > 1e-9 * std::max(1.0, setup.t))
    throw PreconditionError("convergence: t must be a positive multiple of dt");
  EffectiveDynamics eff{ExcitationSpace(b, setup.n_b, setup.n_a), {}, {}, {}, {}, false, {}, 0.0};
  if (eff.space.dim() > setup.max_basis) throw CapacityError("excitation space exceeds the basis guard");
  const ClassicalState s0 = traj.at(0.0);
  eff.initial = initial_excitation(setup.initial, eff.space, b, s0.phi());
  eff.family = CorrectionFamily{std::vector<MatXc>(setup.order + 1, eff.space.zero()), 0.0};
  eff.family.chi[0] = eff.initial;
  for (int j = 0; j < steps; ++j) {
    eff.family = evolve_hierarchy(eff.family, eff.space, traj, setup.dt);
    eff.family.t = (j + 1) * setup.dt;
  }
  if (setup.initial == InitialExcitation::vacuum) {
    eff.has_quad = true;
    eff.quad = quad_initial(b, GeneralizedDensity::vacuum(b.n_p() + b.n_f()));
    for (int j = 0; j < steps; ++j) eff.quad = quad_step(eff.quad, traj, setup.dt);
  }
  eff.propagator_input = initial_excitation(setup.propagator_input, eff.space, b, s0.phi());
  eff.propagator_terms = apply_U(setup.order, eff.propagator_input, setup.t, 0.0, eff.space, traj, setup.dt);
  for (const auto& node : traj.nodes())
    if (node.t <= setup.t + 1e-12) eff.alpha2_max = std::max(eff.alpha2_max, node.alpha.squaredNorm());
  return eff;
}

ConvergencePoint convergence_point(const Trajectory& traj, const EffectiveDynamics& eff, int N,
                                   const ConvergenceSetup& setup) {
  const auto start = std::chrono::steady_clock::now();
  const ModeBasis& b = traj.basis();
  ConvergencePoint pt;
  pt.N = N;
  pt.field_cap = setup.field_cap > 0 ? setup.field_cap : auto_field_cap(N, eff.alpha2_max, setup.n_a);
  const ExactSpace sp(b, N, pt.field_cap, setup.max_basis);
  pt.exact_dim = (long long)sp.dim_p() * sp.dim_a();
  const KronOperator h = build_nelson(sp, b);

  const ClassicalState s0 = traj.at(0.0), st = traj.at(setup.t);
  const MatXc psi0 = assemble_psi_r(s0, {eff.initial}, 0, eff.space, sp, setup.weyl_tail).psi;
  pt.initial_norm = psi0.norm();
  const MatXc psi_t = evolve_exact(psi0, h, setup.t);
  pt.exact_norm_drift = std::abs(psi_t.norm() - psi0.norm());

  for (int r = 0; r <= setup.order; ++r) {
    const AssembledState a = assemble_psi_r(st, eff.family.chi, r, eff.space, sp, setup.weyl_tail);
    pt.errors.push_back((psi_t - a.psi).norm());
    pt.psi_r_norms.push_back(a.psi.norm());
    pt.dropped_mass = std::max(pt.dropped_mass, a.dropped_mass);
  }

  if (eff.has_quad) {
    const ReducedDensities exact = reduced_from_exact(psi_t, sp);
    const ReducedDensities model = densities_next_order(eff.quad.gamma, eff.quad.beta, st, N);
    pt.density_part = trace_norm(exact.part - model.part);
    pt.density_field = trace_norm(exact.field - model.field);
  }

  const int steps = int(std::lround(setup.t / setup.dt));
  MatXc u = eff.propagator_input;
  for (int j = 0; j < steps; ++j) u = evolve_full(u, j * setup.dt, N, eff.space, traj, setup.dt);
  MatXc approx = eff.space.zero();
  for (int r = 0; r <= setup.order; ++r) {
    approx += std::pow(double(N), -0.5 * r) * eff.propagator_terms[r];
    pt.propagator.push_back((u - approx).norm());
  }
  pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return pt;
}

std::vector<ConvergencePoint> convergence_sweep(const Trajectory& traj, const EffectiveDynamics& eff,
                                                const std::vector<int>& Ns, const ConvergenceSetup& setup,
                                                int threads) {
  std::vector<ConvergencePoint> out(Ns.size());
  std::vector<std::exception_ptr> errors(Ns.size());
  auto work = [&](std::size_t i) {
    try {
      out[i] = convergence_point(traj, eff, Ns[i], setup);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int workers = std::max(1, std::min<int>(threads, int(Ns.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < Ns.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < Ns.size(); i += workers) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace nelson

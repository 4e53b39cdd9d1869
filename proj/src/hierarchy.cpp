#include "nelson/hierarchy.hpp"

#include <array>
#include <cmath>

#include "nelson/propagate.hpp"

namespace nelson {

Rational taylor_coeff(int n) {
  if (n < 0) throw PreconditionError("taylor_coeff: n must be nonnegative");
  if (n > 28) throw PreconditionError("taylor_coeff: n too large for 64-bit rationals");
  auto gcd = [](__int128 x, __int128 y) {
    if (x < 0) x = -x;
    while (y) {
      const __int128 t = x % y;
      x = y;
      y = t;
    }
    return x;
  };
  // c_{j+1} = c_j (2j - 1) / (2(j + 1))
  __int128 num = 1, den = 1;
  for (int j = 0; j < n; ++j) {
    num *= 2 * j - 1;
    den *= 2 * (j + 1);
    const __int128 g = gcd(num, den);
    num /= g;
    den /= g;
  }
  return {std::int64_t(num), std::int64_t(den)};
}

double taylor_remainder(int m, double x) {
  double s = std::sqrt(std::max(0.0, 1.0 - x)), p = 1.0;
  for (int n = 0; n <= m; ++n) {
    s -= taylor_coeff(n).value() * p;
    p *= x;
  }
  return s;
}

ExcitationSpace::ExcitationSpace(const ModeBasis& basis, int n_b, int n_a)
    : part_(basis.n_p(), 0, n_b), field_(basis.n_f(), 0, n_a), neg_(basis.neg) {
  for (int p = 0; p < basis.n_p(); ++p) b_.push_back(part_.annihilator(p));
  for (int k = 0; k < basis.n_f(); ++k) a_.push_back(field_.annihilator(k));
  for (int k = 0; k < basis.n_f(); ++k) A_.push_back(SpMat(a_[k].adjoint()) + a_[neg_[k]]);
  nb_ = part_.number();
  na_ = field_.number();
}

MatXc ExcitationSpace::vacuum() const {
  MatXc x = zero();
  x(part_.sector(0).at(0), field_.sector(0).at(0)) = 1.0;
  return x;
}

FluctuationCoefficients fluctuation_coefficients(const ClassicalState& s, const ModeBasis& b) {
  FluctuationCoefficients c;
  c.phi = s.phi();
  c.h = one_body_h(b, s);
  c.kern = build_coupling(c.phi, b);
  c.D = fluctuation_kernels(c.phi, b);
  c.eta = b.eta;
  c.omega = b.omega;
  return c;
}

KronOperator coupling_operator(const ExcitationSpace& sp, const FluctuationCoefficients& c, const VecXd& w) {
  KronOperator op(sp.dim_b(), sp.dim_a());
  const SpMat weight = sp.particles().diagonal(w);
  for (int k = 0; k < int(c.eta.size()); ++k) {
    if (c.eta[k] == 0.0) continue;
    const SpMat left = sp.particles().creator(VecXc(c.kern.K.row(k).transpose())) * weight;
    op.add(1.0, left, sp.A(k));
  }
  op.append(op.adjoint());
  return op;
}

KronOperator build_H0(const ExcitationSpace& sp, const FluctuationCoefficients& c) {
  KronOperator op(sp.dim_b(), sp.dim_a());
  op.add_left(1.0, sp.particles().one_body(c.h));
  op.add_right(1.0, sp.field().one_body(c.omega.cast<cplx>().asDiagonal()));
  op.append(coupling_operator(sp, c, VecXd::Ones(sp.dim_b())));
  return op;
}

KronOperator build_H1(const ExcitationSpace& sp, const FluctuationCoefficients& c) {
  KronOperator op(sp.dim_b(), sp.dim_a());
  for (int k = 0; k < int(c.eta.size()); ++k)
    if (c.eta[k] != 0.0) op.add(c.eta[k], sp.particles().one_body(c.D[k]), sp.A(k));
  return op;
}

KronOperator build_H_ell(int ell, const ExcitationSpace& sp, const FluctuationCoefficients& c) {
  if (ell < 0) throw PreconditionError("build_H_ell: negative order");
  if (ell == 0) return build_H0(sp, c);
  if (ell == 1) return build_H1(sp, c);
  if (ell % 2) return KronOperator(sp.dim_b(), sp.dim_a());
  const int n = ell / 2;
  KronOperator op(sp.dim_b(), sp.dim_a());
  op.append(coupling_operator(sp, c, sp.number_b().array().pow(n).matrix()), taylor_coeff(n).value());
  return op;
}

KronOperator build_full_H(const ExcitationSpace& sp, const FluctuationCoefficients& c, int N) {
  if (N < 1) throw PreconditionError("build_full_H: N must be positive");
  KronOperator op(sp.dim_b(), sp.dim_a());
  op.add_left(1.0, sp.particles().one_body(c.h));
  op.add_right(1.0, sp.field().one_body(c.omega.cast<cplx>().asDiagonal()));
  const VecXd w = (1.0 - sp.number_b().array() / N).max(0.0).sqrt();
  op.append(coupling_operator(sp, c, w));
  op.append(build_H1(sp, c), 1.0 / std::sqrt(double(N)));
  return op;
}

KronOperator remainder_S(int r, int N, const ExcitationSpace& sp, const FluctuationCoefficients& c) {
  if (r < 0 || N < 1) throw PreconditionError("remainder_S: need r >= 0 and N >= 1");
  const int m = r / 2;
  VecXd w(sp.dim_b());
  for (int i = 0; i < sp.dim_b(); ++i) w[i] = taylor_remainder(m, sp.number_b()[i] / N);
  KronOperator op = coupling_operator(sp, c, w);
  if (r == 0) op.append(build_H1(sp, c), 1.0 / std::sqrt(double(N)));
  return op;
}

MatXc number_weight(const ExcitationSpace& sp, const MatXc& chi, double pa, double pb) {
  const VecXd wb = (sp.number_b().array() + 1.0).pow(pb);
  const VecXd wa = (sp.number_a().array() + 1.0).pow(pa);
  return wb.cast<cplx>().asDiagonal() * chi * wa.cast<cplx>().asDiagonal();
}

double moment_report(const ExcitationSpace& sp, const MatXc& chi, int n) {
  double s = 0.0;
  for (int j = 0; j < sp.dim_a(); ++j)
    for (int i = 0; i < sp.dim_b(); ++i)
      s += std::norm(chi(i, j)) * std::pow(sp.number_b()[i] + sp.number_a()[j] + 1.0, 2 * n);
  return std::sqrt(s);
}

double orthogonality_defect(const ExcitationSpace& sp, const MatXc& chi, const VecXc& phi) {
  return (sp.particles().annihilator(phi) * chi).norm();
}

RemainderReport check_remainder_bound(int r, int N, const ExcitationSpace& sp,
                                      const FluctuationCoefficients& c, const std::vector<MatXc>& samples) {
  RemainderReport rep{r, N};
  const KronOperator S = remainder_S(r, N, sp, c);
  // the auxiliary operators, one per choice of a^#(±k)
  std::vector<KronOperator> h1_ops, coupling_ops;
  const VecXd nb_half = sp.number_b().array().pow(0.5 * r).matrix();
  for (int choice = 0; choice < 4; ++choice) {
    KronOperator h1(sp.dim_b(), sp.dim_a()), cp(sp.dim_b(), sp.dim_a());
    for (int k = 0; k < int(c.eta.size()); ++k) {
      if (c.eta[k] == 0.0) continue;
      const int kk = choice & 1 ? sp.neg()[k] : k;
      const SpMat field = choice & 2 ? SpMat(sp.a(kk).adjoint()) : sp.a(kk);
      h1.add(c.eta[k], sp.particles().one_body(c.D[k]), field);
      cp.add(1.0, sp.particles().creator(VecXc(c.kern.K.row(k).transpose())) * sp.particles().diagonal(nb_half),
             field);
    }
    cp.append(cp.adjoint());
    h1_ops.push_back(std::move(h1));
    coupling_ops.push_back(std::move(cp));
  }
  for (const MatXc& x : samples) {
    rep.max_ratio = std::max(rep.max_ratio, S.apply(x).norm() / number_weight(sp, x, 0.5, 0.5 * (r + 2)).norm());
    const double w1 = number_weight(sp, x, 0.5, 1.0).norm();
    const double w2 = number_weight(sp, x, 0.5, 0.5 * (r + 1)).norm();
    for (int i = 0; i < 4; ++i) {
      rep.max_ratio_h1 = std::max(rep.max_ratio_h1, h1_ops[i].apply(x).norm() / w1);
      rep.max_ratio_coupling = std::max(rep.max_ratio_coupling, coupling_ops[i].apply(x).norm() / w2);
    }
  }
  return rep;
}

std::vector<KronOperator> expanded_hamiltonians(int order, const ExcitationSpace& sp,
                                                const FluctuationCoefficients& c) {
  std::vector<KronOperator> ops;
  for (int l = 0; l <= order; ++l) ops.push_back(build_H_ell(l, sp, c));
  return ops;
}

namespace {

// Operators at t, t + dt/2, t + dt, indexed by RK4 stage time.
template <class Build>
auto stage_operators(double t, double dt, const Trajectory& traj, Build&& build) {
  using Op = decltype(build(traj.at(t)));
  std::array<Op, 3> ops{build(traj.at(t)), build(traj.at(t + 0.5 * dt)), build(traj.at(t + dt))};
  return [ops = std::move(ops), t, dt](double s) -> const Op& {
    const double x = (s - t) / dt;
    return ops[x < 0.25 ? 0 : x < 0.75 ? 1 : 2];
  };
}

}  // namespace

CorrectionFamily evolve_hierarchy(const CorrectionFamily& fam, const ExcitationSpace& sp, const Trajectory& traj,
                                  double dt) {
  const int r = fam.order();
  if (r < 0) throw PreconditionError("evolve_hierarchy: empty family");
  const int da = sp.dim_a();
  for (const auto& x : fam.chi)
    if (x.rows() != sp.dim_b() || x.cols() != da) throw PreconditionError("evolve_hierarchy: shape mismatch");
  const auto ops = stage_operators(fam.t, dt, traj, [&](const ClassicalState& s) {
    return expanded_hamiltonians(r, sp, fluctuation_coefficients(s, traj.basis()));
  });
  MatXc y(sp.dim_b(), (r + 1) * da);
  for (int l = 0; l <= r; ++l) y.middleCols(l * da, da) = fam.chi[l];
  auto f = [&](double t, const MatXc& x) -> MatXc {
    const auto& h = ops(t);
    MatXc out = MatXc::Zero(x.rows(), x.cols());
    for (int l = 0; l <= r; ++l) {
      MatXc acc = MatXc::Zero(sp.dim_b(), da);
      h[0].apply_add(x.middleCols(l * da, da), acc);
      for (int m = 0; m < l; ++m)
        if (!h[l - m].terms().empty()) h[l - m].apply_add(x.middleCols(m * da, da), acc);
      out.middleCols(l * da, da) = -I * acc;
    }
    return out;
  };
  y = rk4_step(y, fam.t, dt, f);
  CorrectionFamily next{std::vector<MatXc>(r + 1), fam.t + dt};
  for (int l = 0; l <= r; ++l) next.chi[l] = y.middleCols(l * da, da);
  return next;
}

MatXc evolve_U0(const MatXc& chi, double t, const ExcitationSpace& sp, const Trajectory& traj, double dt) {
  return evolve_hierarchy({{chi}, t}, sp, traj, dt).chi[0];
}

MatXc evolve_full(const MatXc& chi, double t, int N, const ExcitationSpace& sp, const Trajectory& traj,
                  double dt) {
  const auto ops = stage_operators(t, dt, traj, [&](const ClassicalState& s) {
    return build_full_H(sp, fluctuation_coefficients(s, traj.basis()), N);
  });
  return rk4_step(chi, t, dt, [&](double s, const MatXc& x) -> MatXc { return -I * ops(s).apply(x); });
}

std::vector<MatXc> apply_U(int order, const MatXc& chi, double t, double s, const ExcitationSpace& sp,
                           const Trajectory& traj, double dt) {
  if (t < s) throw PreconditionError("apply_U: only forward propagation is supported");
  const int steps = int(std::lround((t - s) / dt));
  if (std::abs(steps * dt - (t - s)) > 1e-9 * std::max(1.0, t))
    throw PreconditionError("apply_U: t - s is not a multiple of dt");
  CorrectionFamily fam{std::vector<MatXc>(order + 1, sp.zero()), s};
  fam.chi[0] = chi;
  for (int j = 0; j < steps; ++j) {
    fam = evolve_hierarchy(fam, sp, traj, dt);
    fam.t = s + (j + 1) * dt;
  }
  return fam.chi;
}

MatXc apply_U_ell(int ell, const MatXc& chi, double t, double s, const ExcitationSpace& sp, const Trajectory& traj,
                  double dt) {
  if (ell < 0) throw PreconditionError("apply_U_ell: negative order");
  return apply_U(ell, chi, t, s, sp, traj, dt)[ell];
}

MatXc embed(const MatXc& chi, const ExcitationSpace& from, const ExcitationSpace& to) {
  std::vector<int> rows(from.dim_b()), cols(from.dim_a());
  for (int i = 0; i < from.dim_b(); ++i) rows[i] = to.particles().find(from.particles().config(i));
  for (int j = 0; j < from.dim_a(); ++j) cols[j] = to.field().find(from.field().config(j));
  MatXc out = to.zero();
  for (int j = 0; j < from.dim_a(); ++j) {
    if (cols[j] < 0) continue;
    for (int i = 0; i < from.dim_b(); ++i)
      if (rows[i] >= 0) out(rows[i], cols[j]) = chi(i, j);
  }
  return out;
}

InitialExcitation parse_initial_excitation(const std::string& name) {
  if (name == "vacuum") return InitialExcitation::vacuum;
  if (name == "one-particle") return InitialExcitation::one_particle;
  if (name == "two-excitation") return InitialExcitation::two_excitation;
  throw PreconditionError("unknown initial excitation '" + name + "'");
}

MatXc initial_excitation(InitialExcitation kind, const ExcitationSpace& sp, const ModeBasis& b, const VecXc& phi) {
  const MatXc vac = sp.vacuum();
  if (kind == InitialExcitation::vacuum) return vac;
  if (sp.n_b() < 1) throw PreconditionError("initial_excitation: particle cap is zero");
  VecXc psi;
  for (int p = 0; p < b.n_p(); ++p) {
    psi = -phi * std::conj(phi[p]);
    psi[p] += 1.0;
    if (psi.norm() > 0.1) break;
  }
  if (psi.norm() <= 0.1) throw PreconditionError("initial_excitation: no mode orthogonal to φ");
  psi.normalize();
  MatXc x = sp.particles().creator(psi) * vac;
  if (kind == InitialExcitation::one_particle) return x;
  if (sp.n_a() < 1) throw PreconditionError("initial_excitation: field cap is zero");
  int k = 0;
  while (k < b.n_f() && b.eta[k] == 0.0) ++k;
  if (k == b.n_f()) k = 0;
  return x * SpMat(sp.a(k).adjoint()).transpose();
}

std::vector<MatXc> sector_samples(const ExcitationSpace& sp, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::vector<MatXc> out;
  for (int j = 0; j < count; ++j) {
    const int sector = count > 1 ? int(std::lround(double(j) * sp.n_b() / (count - 1))) : 0;
    MatXc x = sp.zero();
    for (int i : sp.particles().sector(sector))
      for (int c = 0; c < sp.dim_a(); ++c) x(i, c) = cplx(gauss(rng), gauss(rng));
    x /= x.norm();
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace nelson

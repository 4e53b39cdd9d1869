#include "nelson/densities.hpp"

#include <cmath>

namespace nelson {

namespace {

// Compensated trace, so that tr μ^part = 1 survives the subtraction.
cplx kahan_trace(const MatXc& m) {
  cplx sum = 0.0, carry = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    const cplx y = m(i, i) - carry;
    const cplx t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

MatXc field_annihilate(const MatXc& x, const SpMat& a) { return x * a.transpose(); }

// <b_p' x, b_p x> and <a_k' x, a_k x> on an excitation-type space.
MatXc two_point(const std::vector<MatXc>& z) {
  const int n = int(z.size());
  MatXc g(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) g(p, q) = inner(z[q], z[p]);
  return g;
}

}  // namespace

ReducedDensities reduced_from_exact(const MatXc& psi, const ExactSpace& sp) {
  const ExcitationSpace& ex = sp.excitations();
  const MatXc lifted = sp.lift(psi);
  std::vector<MatXc> bz, az;
  for (int p = 0; p < ex.particles().modes(); ++p) bz.push_back(ex.b(p) * lifted);
  for (int k = 0; k < ex.field().modes(); ++k) az.push_back(field_annihilate(psi, ex.a(k)));
  ReducedDensities d;
  d.part = two_point(bz) / double(sp.N());
  d.field = two_point(az) / double(sp.N());
  return d;
}

ReducedDensities expand_reduced(const MatXc& chi, const ClassicalState& s, const ExactSpace& sp) {
  const ExcitationSpace& ex = sp.excitations();
  if (chi.rows() != ex.dim_b() || chi.cols() != ex.dim_a())
    throw PreconditionError("expand_reduced: χ is not on the excitation space of this N");
  const double N = sp.N();
  const int np = ex.particles().modes(), nf = ex.field().modes();
  VecXd root(ex.dim_b());
  for (int i = 0; i < ex.dim_b(); ++i) root[i] = std::sqrt(std::max(0.0, 1.0 - ex.number_b()[i] / N));

  std::vector<MatXc> bz, az;
  ReducedDensities d;
  d.beta_part.resize(np);
  d.beta_field.resize(nf);
  for (int p = 0; p < np; ++p) {
    bz.push_back(ex.b(p) * chi);
    d.beta_part[p] = inner(chi, root.asDiagonal() * bz.back());
  }
  for (int k = 0; k < nf; ++k) {
    az.push_back(field_annihilate(chi, ex.a(k)));
    d.beta_field[k] = inner(chi, az.back());
  }
  d.gamma_part = two_point(bz);
  d.gamma_field = two_point(az);

  const double norm2 = chi.squaredNorm();
  const VecXc phi = s.phi();
  const MatXc pp = phi * phi.adjoint();
  const cplx tr = kahan_trace(d.gamma_part);
  d.part = pp * norm2 + (phi * d.beta_part.adjoint() + d.beta_part * phi.adjoint()) / std::sqrt(N) +
           (d.gamma_part - pp * tr) / N;
  const VecXc& al = s.alpha;
  d.field = al * al.adjoint() * norm2 + (al * d.beta_field.adjoint() + d.beta_field * al.adjoint()) / std::sqrt(N) +
            d.gamma_field / N;
  return d;
}

ReducedDensities densities_next_order(const GeneralizedDensity& gamma, const OnePointPair& beta01,
                                      const ClassicalState& s, int N) {
  const int np = int(beta01.part.size()), nf = int(beta01.field.size());
  if (gamma.n() != np + nf) throw PreconditionError("densities_next_order: Γ does not match the mode count");
  const MatXc normal = gamma.normal();
  ReducedDensities d;
  d.beta_part = beta01.part;
  d.beta_field = beta01.field;
  d.gamma_part = normal.topLeftCorner(np, np);
  d.gamma_field = normal.bottomRightCorner(nf, nf);
  const VecXc phi = s.phi();
  const MatXc pp = phi * phi.adjoint();
  const cplx tr = kahan_trace(d.gamma_part);
  d.part = pp + (phi * d.beta_part.adjoint() + d.beta_part * phi.adjoint() + d.gamma_part - pp * tr) / double(N);
  const VecXc& al = s.alpha;
  d.field = al * al.adjoint() + (al * d.beta_field.adjoint() + d.beta_field * al.adjoint() + d.gamma_field) / double(N);
  return d;
}

WickReport wick_check(const MatXc& chi, const ExcitationSpace& sp) {
  const int np = sp.particles().modes(), nf = sp.field().modes(), n = np + nf;
  auto apply = [&](int I, const MatXc& x) -> MatXc {
    const bool dag = I >= n;
    const int i = dag ? I - n : I;
    if (i < np) return dag ? MatXc(SpMat(sp.b(i).adjoint()) * x) : MatXc(sp.b(i) * x);
    const SpMat& a = sp.a(i - np);
    return dag ? MatXc(x * SpMat(a.adjoint()).transpose()) : MatXc(x * a.transpose());
  };
  const double norm2 = chi.squaredNorm();
  WickReport w;
  if (norm2 == 0.0) return w;
  for (int I = 0; I < 2 * n; ++I) {
    const MatXc zi = apply(I, chi);
    w.one_point = std::max(w.one_point, std::abs(inner(chi, zi)) / norm2);
    for (int J = 0; J < 2 * n; ++J) {
      const MatXc zji = apply(J, zi);
      for (int K = 0; K < 2 * n; ++K)
        w.three_point = std::max(w.three_point, std::abs(inner(chi, apply(K, zji))) / norm2);
    }
  }
  return w;
}

DensityDefects density_defects(const ReducedDensities& d) {
  DensityDefects x;
  x.hermiticity = std::max(hermiticity_defect(d.part), d.field.size() ? hermiticity_defect(d.field) : 0.0);
  x.trace = std::abs(kahan_trace(d.part) - 1.0);
  return x;
}

}  // namespace nelson

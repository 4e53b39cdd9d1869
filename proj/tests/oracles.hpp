#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <map>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "nelson/hierarchy.hpp"
#include "nelson/propagate.hpp"

namespace oracles {

using namespace nelson;

// Γ_{IJ} = <χ, 𝒵_J^* 𝒵_I χ> computed directly from ladder operators on the
// excitation space; 𝒵 = (b_1..b_np, a_1..a_nf, adjoints).
inline MatXc gamma_from_state(const ExcitationSpace& sp, const MatXc& chi) {
  const int np = sp.particles().modes(), nf = sp.field().modes(), n = np + nf;
  auto apply = [&](int I, const MatXc& x) -> MatXc {
    const bool dag = I >= n;
    const int i = dag ? I - n : I;
    if (i < np) return dag ? MatXc(SpMat(sp.b(i).adjoint()) * x) : MatXc(sp.b(i) * x);
    const SpMat& a = sp.a(i - np);
    return dag ? MatXc(x * SpMat(a.adjoint()).transpose()) : MatXc(x * a.transpose());
  };
  std::vector<MatXc> z(2 * n);
  for (int I = 0; I < 2 * n; ++I) z[I] = apply(I, chi);
  MatXc g(2 * n, 2 * n);
  // <χ, 𝒵_J^* 𝒵_I χ> = <𝒵_J χ, 𝒵_I χ>
  for (int I = 0; I < 2 * n; ++I)
    for (int J = 0; J < 2 * n; ++J) g(I, J) = inner(z[J], z[I]);
  return g;
}

// Ladder word acting on one occupation pair. Letters: 'b'/'B' annihilate or
// create a particle, 'a'/'A' the same for the field; applied right to left.
struct Letter {
  char kind;
  int mode;
};

inline double apply_word(const std::vector<Letter>& word, std::vector<int>& nb, std::vector<int>& na) {
  double amp = 1.0;
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    std::vector<int>& occ = (it->kind == 'b' || it->kind == 'B') ? nb : na;
    int& n = occ[it->mode];
    if (it->kind == 'b' || it->kind == 'a') {
      if (n == 0) return 0.0;
      amp *= std::sqrt(double(n));
      --n;
    } else {
      amp *= std::sqrt(double(n + 1));
      ++n;
    }
  }
  return amp;
}

struct Monomial {
  cplx coeff;
  std::vector<Letter> word;
};

// Matrix of sum_m c_m word_m on the truncated space, assembled entry by entry.
inline MatXc assemble_monomials(const ExcitationSpace& sp, const std::vector<Monomial>& terms) {
  const int db = sp.dim_b(), da = sp.dim_a();
  const int np = sp.particles().modes(), nf = sp.field().modes();
  MatXc m = MatXc::Zero(db * da, db * da);
  for (int jb = 0; jb < db; ++jb)
    for (int ja = 0; ja < da; ++ja)
      for (const auto& t : terms) {
        std::vector<int> nb(sp.particles().config(jb), sp.particles().config(jb) + np);
        std::vector<int> na(sp.field().config(ja), sp.field().config(ja) + nf);
        const double amp = apply_word(t.word, nb, na);
        if (amp == 0.0) continue;
        int tb = 0, ta = 0;
        if (std::accumulate(nb.begin(), nb.end(), 0) > sp.n_b()) continue;
        if (std::accumulate(na.begin(), na.end(), 0) > sp.n_a()) continue;
        std::vector<std::uint8_t> cb(nb.begin(), nb.end()), ca(na.begin(), na.end());
        tb = sp.particles().find(cb.data());
        ta = sp.field().find(ca.data());
        // column-major vec index: row + db * col
        m(tb + db * ta, jb + db * ja) += t.coeff * amp;
      }
  return m;
}

// Monomial expansion of the Bogoliubov Hamiltonian.
inline std::vector<Monomial> h0_monomials(const FluctuationCoefficients& c, const std::vector<int>& neg) {
  std::vector<Monomial> t;
  const int np = int(c.h.rows()), nf = int(c.omega.size());
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) t.push_back({c.h(p, q), {{'B', p}, {'b', q}}});
  for (int k = 0; k < nf; ++k) t.push_back({c.omega[k], {{'A', k}, {'a', k}}});
  for (int k = 0; k < nf; ++k)
    for (int p = 0; p < np; ++p) {
      const cplx K = c.kern.K(k, p);
      t.push_back({K, {{'A', k}, {'B', p}}});
      t.push_back({K, {{'a', neg[k]}, {'B', p}}});
      t.push_back({std::conj(K), {{'b', p}, {'a', k}}});
      t.push_back({std::conj(K), {{'b', p}, {'A', neg[k]}}});
    }
  return t;
}

inline MatXc dense(const KronOperator& op) { return MatXc(op.materialize()); }

// Propagators U_0(τ_j, s) on τ_j = s + j δ, by RK4 on the full matrix.
inline std::vector<MatXc> u0_table(const ExcitationSpace& sp, const Trajectory& traj, double s, double delta,
                                   int steps) {
  const int d = int(sp.dim());
  std::vector<MatXc> u{MatXc::Identity(d, d)};
  for (int j = 0; j < steps; ++j) {
    const double t = s + j * delta;
    auto h = [&](double tau) { return dense(build_H0(sp, fluctuation_coefficients(traj.at(tau), traj.basis()))); };
    const MatXc h0 = h(t), h1 = h(t + 0.5 * delta), h2 = h(t + delta);
    auto f = [&](double tau, const MatXc& x) -> MatXc {
      const double r = (tau - t) / delta;
      const MatXc& hh = r < 0.25 ? h0 : r < 0.75 ? h1 : h2;
      return -I * (hh * x);
    };
    u.push_back(rk4_step(u.back(), t, delta, f));
  }
  return u;
}

// U_1(t,s) and U_2(t,s) as matrices from the iterated Duhamel integrals over
// the simplices, by composite trapezoid on `steps` intervals.
inline std::vector<MatXc> duhamel_terms(const ExcitationSpace& sp, const Trajectory& traj, double s, double t,
                                        int steps) {
  const double delta = (t - s) / steps;
  const std::vector<MatXc> u = u0_table(sp, traj, s, delta, steps);
  const int d = int(sp.dim());
  std::vector<MatXc> m1(steps + 1), m2(steps + 1);
  for (int j = 0; j <= steps; ++j) {
    const FluctuationCoefficients c = fluctuation_coefficients(traj.at(s + j * delta), traj.basis());
    m1[j] = u[j].adjoint() * dense(build_H_ell(1, sp, c)) * u[j];
    m2[j] = u[j].adjoint() * dense(build_H_ell(2, sp, c)) * u[j];
  }
  // interaction picture: W_1 = -i ∫ M_1, W_2 = -i ∫ M_2 - ∫ M_1(τ) C(τ) dτ with C(τ) = ∫_s^τ M_1
  MatXc w1 = MatXc::Zero(d, d), w2a = MatXc::Zero(d, d), w2b = MatXc::Zero(d, d);
  std::vector<MatXc> cum(steps + 1, MatXc::Zero(d, d));
  for (int j = 1; j <= steps; ++j) cum[j] = cum[j - 1] + 0.5 * delta * (m1[j - 1] + m1[j]);
  for (int j = 0; j <= steps; ++j) {
    const double w = (j == 0 || j == steps) ? 0.5 * delta : delta;
    w1 += w * m1[j];
    w2a += w * m2[j];
    w2b += w * (m1[j] * cum[j]);
  }
  return {u[steps], u[steps] * (-I * w1), u[steps] * (-I * w2a - w2b)};
}

// Richardson-extrapolated Duhamel terms (trapezoid error is O(δ^2)).
inline std::vector<MatXc> duhamel_terms_extrapolated(const ExcitationSpace& sp, const Trajectory& traj, double s,
                                                     double t, int steps) {
  const auto coarse = duhamel_terms(sp, traj, s, t, steps);
  const auto fine = duhamel_terms(sp, traj, s, t, 2 * steps);
  std::vector<MatXc> out;
  for (std::size_t l = 0; l < fine.size(); ++l) out.push_back((4.0 * fine[l] - coarse[l]) / 3.0);
  return out;
}

// i U̇_N U_N^* χ from the explicit generator of the excitation map, for χ in
// ker b(φ) with at most N particle excitations, where (N_b)_+ = N_b:
//   b^*(φ) b(g) - sqrt(N - N_b) b(g) - b^*(g) sqrt(N - N_b) - <iφ̇, φ>(N - N_b)
//   - N Re<iα̇, α> - sqrt(N) (a(iα̇) + a^*(iα̇)),  g = q iφ̇.
inline MatXc map_generator(const MatXc& chi, const ClassicalState& s, const ModeBasis& basis,
                           const ExcitationSpace& sp, int N) {
  const VecXc phi = s.phi();
  const VecXc idphi = one_body_h(basis, s) * phi;
  const VecXc g = idphi - phi * phi.dot(idphi);
  const VecXc idalpha = I * skg_rate(basis, s).dalpha;
  const FockSpace& part = sp.particles();
  VecXd root(sp.dim_b()), rest(sp.dim_b());
  for (int i = 0; i < sp.dim_b(); ++i) {
    rest[i] = N - sp.number_b()[i];
    root[i] = std::sqrt(std::max(0.0, rest[i]));
  }
  const SpMat bg = part.annihilator(g), bsg = part.creator(g);
  const SpMat a = sp.field().annihilator(idalpha), as = sp.field().creator(idalpha);
  const cplx phase = idphi.dot(phi);
  MatXc out = part.creator(phi) * (bg * chi);
  out -= root.asDiagonal() * (bg * chi);
  out -= bsg * (root.asDiagonal() * chi);
  out -= phase * (rest.asDiagonal() * chi);
  out -= N * std::real(idalpha.dot(s.alpha)) * chi;
  out -= std::sqrt(double(N)) * (chi * SpMat(a + as).transpose());
  return out;
}

}  // namespace oracles

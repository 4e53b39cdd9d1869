#include "common.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace nelson;
using namespace testing_support;

namespace {

struct Setup {
  ModelConfig c;
  ModeBasis b;
  ClassicalState s;
  explicit Setup(ModelConfig cfg = small_model(0.3)) : c(std::move(cfg)), b(build_basis(c)), s(initial_state(c, b)) {}
};

}  // namespace

TEST_CASE("Taylor coefficients of sqrt(1 - x)") {
  CHECK(taylor_coeff(0) == Rational{1, 1});
  CHECK(taylor_coeff(1) == Rational{-1, 2});
  CHECK(taylor_coeff(2) == Rational{-1, 8});
  CHECK(taylor_coeff(3) == Rational{-1, 16});
  CHECK(taylor_coeff(4) == Rational{-5, 128});
  double sum = 0.0;
  for (int n = 0; n <= 28; ++n) sum += taylor_coeff(n).value() * std::pow(0.3, n);
  CHECK(sum == doctest::Approx(std::sqrt(0.7)).epsilon(1e-14));
  CHECK(taylor_remainder(0, 0.0) == 0.0);
  CHECK(taylor_remainder(2, 0.0) == 0.0);
  CHECK(taylor_remainder(1, 2.0) == doctest::Approx(-1.0 + 1.0));
  CHECK_THROWS_AS(taylor_coeff(-1), PreconditionError);
}

TEST_CASE("H0 matches the hand-assembled occupation-basis oracle") {
  Setup st;
  ExcitationSpace sp(st.b, 2, 2);
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  const MatXc ours = oracles::dense(build_H0(sp, c));
  const MatXc ref = oracles::assemble_monomials(sp, oracles::h0_monomials(c, st.b.neg));
  CHECK(max_abs(ours - ref) < 1e-14);
}

TEST_CASE("H1 matches the hand-assembled oracle") {
  Setup st;
  ExcitationSpace sp(st.b, 2, 2);
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  std::vector<oracles::Monomial> terms;
  for (int k = 0; k < st.b.n_f(); ++k)
    for (int p = 0; p < st.b.n_p(); ++p)
      for (int q = 0; q < st.b.n_p(); ++q) {
        const cplx v = c.eta[k] * c.D[k](p, q);
        terms.push_back({v, {{'A', k}, {'B', p}, {'b', q}}});
        terms.push_back({v, {{'a', st.b.neg[k]}, {'B', p}, {'b', q}}});
      }
  CHECK(max_abs(oracles::dense(build_H1(sp, c)) - oracles::assemble_monomials(sp, terms)) < 1e-14);
}

TEST_CASE("expanded Hamiltonians are self-adjoint and odd orders above one vanish") {
  Setup st(medium_model());
  ExcitationSpace sp(st.b, 3, 2);
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  for (int l = 0; l <= 6; ++l) {
    const MatXc h = oracles::dense(build_H_ell(l, sp, c));
    CHECK(hermiticity_defect(h) < 1e-12);
    if (l >= 3 && l % 2) CHECK(build_H_ell(l, sp, c).terms().empty());
  }
  CHECK(hermiticity_defect(oracles::dense(build_full_H(sp, c, 5))) < 1e-12);
  CHECK_THROWS_AS(build_H_ell(-1, sp, c), PreconditionError);
}

TEST_CASE("g = 0 leaves only the free one-body terms") {
  ModelConfig cfg = small_model();
  cfg.form_factor = {0.0, 0.0};
  Setup st(cfg);
  ExcitationSpace sp(st.b, 2, 2);
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  CHECK(build_H_ell(1, sp, c).terms().empty());
  CHECK(max_abs(oracles::dense(build_H_ell(2, sp, c))) == 0.0);
  std::mt19937_64 rng(1);
  const auto samples = sector_samples(sp, 5, rng);
  CHECK(check_remainder_bound(2, 4, sp, c, samples).max_ratio == 0.0);
}

TEST_CASE("expansion plus remainder reproduces the full excitation Hamiltonian") {
  Setup st(medium_model());
  ExcitationSpace sp(st.b, 5, 2);
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  for (int N : {3, 4, 7}) {
    const MatXc full = oracles::dense(build_full_H(sp, c, N));
    for (int r = 0; r <= 5; ++r) {
      MatXc sum = oracles::dense(remainder_S(r, N, sp, c));
      for (int l = 0; l <= r; ++l) sum += std::pow(double(N), -0.5 * l) * oracles::dense(build_H_ell(l, sp, c));
      CHECK(max_abs(sum - full) < 1e-12);
    }
    CHECK(max_abs(oracles::dense(remainder_S(3, N, sp, c)) - oracles::dense(remainder_S(2, N, sp, c))) == 0.0);
  }
}

TEST_CASE("the square-root factor closes the sector N_b = N") {
  Setup st;
  const int N = 3;
  ExcitationSpace sp(st.b, 5, 2);
  const MatXc h = oracles::dense(build_full_H(sp, fluctuation_coefficients(st.s, st.b), N));
  // no matrix element from N_b <= N into N_b > N
  for (int j = 0; j < int(sp.dim()); ++j)
    for (int i = 0; i < int(sp.dim()); ++i) {
      const int bi = int(sp.number_b()[i % sp.dim_b()]), bj = int(sp.number_b()[j % sp.dim_b()]);
      if (bj <= N && bi > N) CHECK(std::abs(h(i, j)) == 0.0);
    }
}

TEST_CASE("moment report") {
  Setup st;
  ExcitationSpace sp(st.b, 3, 3);
  CHECK(moment_report(sp, sp.vacuum(), 4) == doctest::Approx(1.0));
  const MatXc one = initial_excitation(InitialExcitation::one_particle, sp, st.b, st.s.phi());
  CHECK(moment_report(sp, one, 1) == doctest::Approx(2.0));
  const MatXc two = initial_excitation(InitialExcitation::two_excitation, sp, st.b, st.s.phi());
  CHECK(two.norm() == doctest::Approx(1.0));
  CHECK(moment_report(sp, two, 1) == doctest::Approx(3.0));
  CHECK(orthogonality_defect(sp, two, st.s.phi()) < 1e-14);
}

TEST_CASE("U0 preserves the norm and the excitation constraint") {
  Setup st;
  ExcitationSpace sp(st.b, 6, 6);
  const double dt = 1e-3;
  Trajectory traj(st.b, st.s, 1.0, dt / 2);
  MatXc chi = initial_excitation(InitialExcitation::two_excitation, sp, st.b, st.s.phi());
  for (int j = 0; j < 1000; ++j) chi = evolve_U0(chi, j * dt, sp, traj, dt);
  CHECK(std::abs(chi.norm() - 1.0) < 1e-8);
  CHECK(orthogonality_defect(sp, chi, traj.at(1.0).phi()) < 1e-8);
}

TEST_CASE("U0 matches the dense exponential at frozen coefficients") {
  Setup st;
  ExcitationSpace sp(st.b, 3, 3);
  // constant generator built from the initial state
  const FluctuationCoefficients c = fluctuation_coefficients(st.s, st.b);
  const KronOperator h0 = build_H0(sp, c);
  const MatXc dense_h = oracles::dense(h0);
  const MatXc x0 = initial_excitation(InitialExcitation::two_excitation, sp, st.b, st.s.phi());
  MatXc x = x0;
  const double dt = 1e-3;
  for (int j = 0; j < 500; ++j) x = rk4_step(x, 0.0, dt, [&](double, const MatXc& y) -> MatXc { return -I * h0.apply(y); });
  const MatXc ref = (MatXc(-I * 0.5 * dense_h)).exp() * vec(x0);
  CHECK(max_abs(vec(x) - ref) < 1e-8);
}

TEST_CASE("Γ from the quadratic layer matches Fock-space two-point functions") {
  Setup st;
  ExcitationSpace sp(st.b, 8, 8);
  const double dt = 1e-3;
  Trajectory traj(st.b, st.s, 0.5, dt / 2);
  MatXc chi = sp.vacuum();
  QuadState q = quad_initial(st.b, GeneralizedDensity::vacuum(st.b.n_p() + st.b.n_f()));
  for (int j = 0; j < 500; ++j) {
    chi = evolve_U0(chi, j * dt, sp, traj, dt);
    q = quad_step(q, traj, dt);
  }
  CHECK(max_abs(oracles::gamma_from_state(sp, chi) - q.gamma.gamma) < 1e-6);
}

TEST_CASE("β01 matches mixed matrix elements of the hierarchy") {
  Setup st;
  ExcitationSpace sp(st.b, 8, 8);
  const double dt = 1e-3;
  Trajectory traj(st.b, st.s, 0.5, dt / 2);
  CorrectionFamily fam{{sp.vacuum(), sp.zero()}, 0.0};
  QuadState q = quad_initial(st.b, GeneralizedDensity::vacuum(st.b.n_p() + st.b.n_f()));
  for (int j = 0; j < 500; ++j) {
    fam = evolve_hierarchy(fam, sp, traj, dt);
    q = quad_step(q, traj, dt);
  }
  const MatXc &x0 = fam.chi[0], &x1 = fam.chi[1];
  for (int p = 0; p < st.b.n_p(); ++p) {
    const cplx ref = inner(x0, sp.b(p) * x1) + inner(x1, sp.b(p) * x0);
    CHECK(std::abs(ref - q.beta.part[p]) < 1e-5);
  }
  for (int k = 0; k < st.b.n_f(); ++k) {
    const SpMat at = sp.a(k).transpose();
    const cplx ref = inner(x0, x1 * at) + inner(x1, x0 * at);
    CHECK(std::abs(ref - q.beta.field[k]) < 1e-5);
  }
  CHECK(q.beta.part.norm() > 1e-3);
}

TEST_CASE("hierarchy agrees with the Duhamel simplex quadrature up to r = 2") {
  Setup st;
  ExcitationSpace sp(st.b, 2, 2);
  const double t = 0.5, dt = 1e-3;
  Trajectory traj(st.b, st.s, t, dt / 4);
  const MatXc chi = initial_excitation(InitialExcitation::two_excitation, sp, st.b, st.s.phi());
  const auto hier = apply_U(2, chi, t, 0.0, sp, traj, dt);
  const auto quad = oracles::duhamel_terms_extrapolated(sp, traj, 0.0, t, 250);
  for (int l = 0; l <= 2; ++l) CHECK(max_abs(vec(hier[l]) - quad[l] * vec(chi)) < 1e-5);
  CHECK(hier[2].norm() > 1e-3);
}

TEST_CASE("U_ell(t,t) vanishes and the composition identity holds") {
  Setup st;
  ExcitationSpace sp(st.b, 3, 3);
  const double dt = 1e-3;
  Trajectory traj(st.b, st.s, 0.6, dt / 2);
  const MatXc chi = initial_excitation(InitialExcitation::two_excitation, sp, st.b, st.s.phi());
  const auto same = apply_U(3, chi, 0.2, 0.2, sp, traj, dt);
  CHECK(max_abs(same[0] - chi) == 0.0);
  for (int l = 1; l <= 3; ++l) CHECK(max_abs(same[l]) == 0.0);
  // U_ℓ(t,r) = sum_k U_k(t,s) U_{ℓ-k}(s,r)
  const double r = 0.0, s = 0.25, t = 0.6;
  const auto direct = apply_U(2, chi, t, r, sp, traj, dt);
  const auto first = apply_U(2, chi, s, r, sp, traj, dt);
  for (int l = 0; l <= 2; ++l) {
    MatXc sum = sp.zero();
    for (int k = 0; k <= l; ++k) sum += apply_U(k, first[l - k], t, s, sp, traj, dt)[k];
    CHECK(max_abs(sum - direct[l]) < 1e-6);
  }
}

TEST_CASE("r = 1 with a vanishing source reduces to U0") {
  ModelConfig cfg = small_model();
  cfg.form_factor = {0.0, 0.0};
  Setup st(cfg);
  ExcitationSpace sp(st.b, 2, 2);
  Trajectory traj(st.b, st.s, 0.2, 5e-4);
  std::mt19937_64 rng(3);
  const MatXc x0 = random_matrix(sp.dim_b(), sp.dim_a(), rng), x1 = random_matrix(sp.dim_b(), sp.dim_a(), rng);
  CorrectionFamily fam{{x0, x1}, 0.0};
  MatXc u = x1;
  for (int j = 0; j < 200; ++j) {
    fam = evolve_hierarchy(fam, sp, traj, 1e-3);
    u = evolve_U0(u, j * 1e-3, sp, traj, 1e-3);
  }
  CHECK(max_abs(fam.chi[1] - u) < 1e-14);
}

TEST_CASE("embedding between caps keeps shared coefficients") {
  Setup st;
  ExcitationSpace small(st.b, 2, 2), big(st.b, 4, 3);
  std::mt19937_64 rng(5);
  const MatXc x = random_matrix(small.dim_b(), small.dim_a(), rng);
  const MatXc y = embed(x, small, big);
  CHECK(y.norm() == doctest::Approx(x.norm()));
  CHECK(max_abs(embed(y, big, small) - x) == 0.0);
}

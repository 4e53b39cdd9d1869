#include "common.hpp"
#include "doctest.h"

#include "nelson/densities.hpp"

using namespace nelson;
using namespace testing_support;

namespace {

struct Setup {
  ModelConfig c;
  ModeBasis b;
  ClassicalState s;
  explicit Setup(ModelConfig cfg = small_model(0.3)) : c(std::move(cfg)), b(build_basis(c)), s(initial_state(c, b)) {}
};

MatXc random_excitation(const ExcitationSpace& ex, const VecXc& phi, int field_max, std::mt19937_64& rng) {
  MatXc x = random_matrix(ex.dim_b(), ex.dim_a(), rng);
  for (int j = 0; j < ex.dim_a(); ++j)
    if (ex.field().total(j) > field_max) x.col(j).setZero();
  const SpMat b = ex.particles().annihilator(phi);
  const SpMat n = SpMat(b.adjoint()) * b;
  for (int j = ex.n_b(); j >= 1; --j) x = x - (n * x) / double(j);
  return x / x.norm();
}

}  // namespace

TEST_CASE("Reduced densities of the condensate") {
  Setup st;
  const int N = 6;
  const ExactSpace sp(st.b, N, 30);
  const ExcitationSpace& ex = sp.excitations();
  const VecXc phi = st.s.phi();

  ClassicalState bare = st.s;
  bare.alpha.setZero();
  const ReducedDensities d0 = reduced_from_exact(excitation_map_inverse(ex.vacuum(), bare, sp), sp);
  CHECK(max_abs(d0.part - phi * phi.adjoint()) < 1e-12);
  CHECK(max_abs(d0.field) == 0.0);

  // coherent field: <a_k'^* a_k> = N α_k conj(α_k')
  const ReducedDensities d = reduced_from_exact(excitation_map_inverse(ex.vacuum(), st.s, sp), sp);
  CHECK(max_abs(d.field - st.s.alpha * st.s.alpha.adjoint()) < 1e-10);
  const DensityDefects def = density_defects(d);
  CHECK(def.hermiticity < 1e-12);
  CHECK(def.trace < 1e-12);
}

TEST_CASE("One excitation gives weights (N-1)/N and 1/N") {
  Setup st;
  const int N = 5;
  const ExactSpace sp(st.b, N, 20);
  const ExcitationSpace& ex = sp.excitations();
  const MatXc chi = initial_excitation(InitialExcitation::one_particle, ex, st.b, st.s.phi());
  const ReducedDensities d = reduced_from_exact(excitation_map_inverse(chi, st.s, sp), sp);
  Eigen::SelfAdjointEigenSolver<MatXc> eig(d.part);
  CHECK(eig.eigenvalues()[0] == doctest::Approx(1.0 / N).epsilon(1e-12));
  CHECK(eig.eigenvalues()[1] == doctest::Approx((N - 1.0) / N).epsilon(1e-12));
}

TEST_CASE("Expansion of the reduced densities is an identity") {
  Setup st(medium_model());
  for (int N : {2, 4}) {
    const ExactSpace sp(st.b, N, 16);
    const ExcitationSpace& ex = sp.excitations();
    const ReducedDensities vac = expand_reduced(ex.vacuum(), st.s, sp);
    CHECK(max_abs(vac.part - st.s.phi() * st.s.phi().adjoint()) == 0.0);
    CHECK(max_abs(vac.field - st.s.alpha * st.s.alpha.adjoint()) == 0.0);

    std::mt19937_64 rng(N);
    const MatXc chi = random_excitation(ex, st.s.phi(), 3, rng);
    const ReducedDensities ref = reduced_from_exact(excitation_map_inverse(chi, st.s, sp), sp);
    const ReducedDensities ours = expand_reduced(chi, st.s, sp);
    CHECK(max_abs(ours.part - ref.part) < 1e-10);
    CHECK(max_abs(ours.field - ref.field) < 1e-10);
    CHECK(density_defects(ours).trace < 1e-12);
  }
}

TEST_CASE("The square-root insertion in β^part is needed") {
  Setup st;
  const int N = 3;
  const ExactSpace sp(st.b, N, 16);
  const ExcitationSpace& ex = sp.excitations();
  std::mt19937_64 rng(8);
  MatXc chi = random_excitation(ex, st.s.phi(), 2, rng);
  // weight the top sector heavily
  for (int i : ex.particles().sector(N)) chi.row(i) *= 20.0;
  for (int i : ex.particles().sector(N - 1)) chi.row(i) *= 20.0;
  chi /= chi.norm();
  const ReducedDensities ref = reduced_from_exact(excitation_map_inverse(chi, st.s, sp), sp);
  const ReducedDensities ours = expand_reduced(chi, st.s, sp);
  CHECK(max_abs(ours.part - ref.part) < 1e-10);

  VecXc plain(st.b.n_p());
  for (int p = 0; p < st.b.n_p(); ++p) plain[p] = inner(chi, ex.b(p) * chi);
  const VecXc phi = st.s.phi();
  const MatXc without = ours.part + (phi * (plain - ours.beta_part).adjoint() + (plain - ours.beta_part) * phi.adjoint()) /
                                        std::sqrt(double(N));
  CHECK(max_abs(without - ref.part) > 1e-3);
}

TEST_CASE("Next-order densities at t = 0 are the mean-field projections") {
  Setup st;
  const int n = st.b.n_p() + st.b.n_f();
  const OnePointPair beta{VecXc::Zero(st.b.n_p()), VecXc::Zero(st.b.n_f()), 0.0};
  const ReducedDensities d = densities_next_order(GeneralizedDensity::vacuum(n), beta, st.s, 8);
  CHECK(max_abs(d.part - st.s.phi() * st.s.phi().adjoint()) == 0.0);
  CHECK(max_abs(d.field - st.s.alpha * st.s.alpha.adjoint()) == 0.0);
  CHECK_THROWS_AS(densities_next_order(GeneralizedDensity::vacuum(n + 1), beta, st.s, 8), PreconditionError);
}

TEST_CASE("Odd moments of quasi-free states vanish") {
  Setup st;
  const ExcitationSpace sp(st.b, 6, 6);
  const Trajectory traj(st.b, st.s, 0.3, 5e-4);
  const WickReport vac = wick_check(sp.vacuum(), sp);
  CHECK(vac.one_point == 0.0);
  CHECK(vac.three_point == 0.0);

  MatXc chi = sp.vacuum();
  for (int j = 0; j < 300; ++j) chi = evolve_U0(chi, j * 1e-3, sp, traj, 1e-3);
  const WickReport sq = wick_check(chi, sp);
  CHECK(sq.one_point <= 1e-10);
  CHECK(sq.three_point <= 1e-10);

  // a displaced vacuum is not quasi-free around φ
  MatXc shifted = sp.vacuum() + 0.3 * (sp.vacuum() * SpMat(sp.a(0).adjoint()).transpose());
  shifted /= shifted.norm();
  CHECK(wick_check(shifted, sp).one_point > 0.1);
}

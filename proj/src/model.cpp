#include "nelson/model.hpp"

#include <cmath>
#include <map>

namespace nelson {

namespace {

double momentum_norm2(const Lattice& n, int d, double L) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += double(n[i]) * n[i];
  return s / (L * L);
}

int find_mode(const std::vector<Lattice>& set, const Lattice& n) {
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i] == n) return int(i);
  return -1;
}

}  // namespace

void validate(const ModelConfig& c) {
  if (c.dimension != 1 && c.dimension != 3) throw PreconditionError("dimension must be 1 or 3");
  if (!(c.box_length > 0)) throw PreconditionError("box_length must be positive");
  if (c.particle_modes.empty()) throw PreconditionError("particle mode set is empty");
  if (c.field_modes.empty()) throw PreconditionError("field mode set is empty");
  if (c.mass < 0) throw PreconditionError("field_mass must be nonnegative");
  if (c.form_factor.size() != c.field_modes.size())
    throw PreconditionError("form_factor needs one value per field mode");
  if (!(c.dt > 0) || !(c.t_final > 0)) throw PreconditionError("dt and t_final must be positive");
  if (c.n_b < 0 || c.n_a < 0) throw PreconditionError("truncation caps must be nonnegative");
  if (c.order < 0) throw PreconditionError("order must be nonnegative");
  for (const auto& n : c.particle_modes)
    for (int i = c.dimension; i < 3; ++i)
      if (n[i] != 0) throw PreconditionError("mode has components beyond the dimension");
  for (std::size_t j = 0; j < c.field_modes.size(); ++j) {
    const Lattice& n = c.field_modes[j];
    for (int i = c.dimension; i < 3; ++i)
      if (n[i] != 0) throw PreconditionError("mode has components beyond the dimension");
    int m = find_mode(c.field_modes, Lattice(-n));
    if (m < 0) throw PreconditionError("field mode set is not symmetric under k -> -k");
    if (c.form_factor[j] != c.form_factor[m]) throw PreconditionError("form factor is not even");
    if (c.mass == 0 && n.isZero() && c.form_factor[j] != 0)
      throw PreconditionError("massless field requires g(0) = 0");
  }
  for (std::size_t i = 0; i < c.particle_modes.size(); ++i)
    if (find_mode(c.particle_modes, c.particle_modes[i]) != int(i))
      throw PreconditionError("duplicate particle mode");
  if (c.initial_u.size() && c.initial_u.size() != long(c.particle_modes.size()))
    throw PreconditionError("initial_u needs one coefficient per particle mode");
  if (c.initial_alpha.size() && c.initial_alpha.size() != long(c.field_modes.size()))
    throw PreconditionError("initial_alpha needs one coefficient per field mode");
}

ModeBasis build_basis(const ModelConfig& c) {
  validate(c);
  ModeBasis b;
  b.dimension = c.dimension;
  b.box_length = c.box_length;
  b.mass = c.mass;
  b.particle_index = c.particle_modes;
  b.field_index = c.field_modes;
  const int np = int(c.particle_modes.size()), nf = int(c.field_modes.size());
  const double L = c.box_length;
  b.particle_momenta.resize(c.dimension, np);
  b.field_momenta.resize(c.dimension, nf);
  b.kappa.resize(np);
  for (int p = 0; p < np; ++p) {
    for (int i = 0; i < c.dimension; ++i) b.particle_momenta(i, p) = c.particle_modes[p][i] / L;
    b.kappa[p] = 4.0 * M_PI * M_PI * momentum_norm2(c.particle_modes[p], c.dimension, L);
  }
  b.omega.resize(nf);
  b.g.resize(nf);
  b.eta.resize(nf);
  b.neg.resize(nf);
  b.shift.assign(nf, std::vector<int>(np, -1));
  for (int k = 0; k < nf; ++k) {
    const Lattice& n = c.field_modes[k];
    for (int i = 0; i < c.dimension; ++i) b.field_momenta(i, k) = n[i] / L;
    b.omega[k] = std::sqrt(momentum_norm2(n, c.dimension, L) + c.mass * c.mass);
    b.g[k] = c.form_factor[k];
    b.eta[k] = b.g[k] == 0.0 ? 0.0 : b.g[k] / std::sqrt(2.0 * b.omega[k]);
    b.neg[k] = find_mode(c.field_modes, Lattice(-n));
    for (int p = 0; p < np; ++p) b.shift[k][p] = find_mode(c.particle_modes, c.particle_modes[p] - n);
  }
  return b;
}

MatXc shift_matrix(const ModeBasis& b, int k) {
  MatXc t = MatXc::Zero(b.n_p(), b.n_p());
  for (int p = 0; p < b.n_p(); ++p)
    if (b.shift[k][p] >= 0) t(b.shift[k][p], p) = 1.0;
  return t;
}

FourierPair::FourierPair(int d, double L, const std::vector<Lattice>& modes) : dimension_(d) {
  const int n = int(modes.size());
  if (n == 0) throw PreconditionError("FourierPair: empty mode set");
  volume_ = std::pow(L, d);
  int spread = 0;
  for (const auto& m : modes) spread = std::max(spread, m.cwiseAbs().maxCoeff());
  const long long radix = 2LL * spread + 1;
  // Rank-1 lattice x_j = frac(j z / n) L with z = (1, M, M^2); for a full
  // symmetric lattice of side M this is the ordinary tensor DFT grid.
  const long long z[3] = {1, radix, radix * radix};
  grid_.resize(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) grid_(i, j) = double((j * z[i]) % n) / n * L;
  forward_.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      double phase = 0.0;
      for (int i = 0; i < d; ++i) phase += modes[k][i] / L * grid_(i, j);
      forward_(k, j) = std::polar(volume_ / n, -2.0 * M_PI * phase);
    }
  lu_.compute(forward_);
}

VecXc FourierPair::forward(const VecXc& values) const {
  if (values.size() != size()) throw PreconditionError("FourierPair: size mismatch");
  return forward_ * values;
}

VecXc FourierPair::inverse(const VecXc& coefficients) const {
  if (coefficients.size() != size()) throw PreconditionError("FourierPair: size mismatch");
  return lu_.solve(coefficients);
}

}  // namespace nelson

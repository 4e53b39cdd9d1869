#include "nelson/propagate.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

namespace nelson {

MatXc expmv_krylov(const LinearMap& h, const MatXc& x, double t, double tol, int krylov_dim) {
  MatXc y = x;
  double done = 0.0;
  const double total = std::abs(t), sign = t < 0 ? -1.0 : 1.0;
  double tau = total;
  while (done < total) {
    const double beta0 = y.norm();
    if (beta0 == 0.0) return y;
    std::vector<MatXc> v;
    v.reserve(krylov_dim + 1);
    v.push_back(y / beta0);
    VecXd alpha(krylov_dim), beta(krylov_dim);
    int m = 0;
    bool breakdown = false;
    for (; m < krylov_dim; ++m) {
      MatXc w = h(v[m]);
      alpha[m] = inner(v[m], w).real();
      w -= alpha[m] * v[m];
      if (m > 0) w -= beta[m - 1] * v[m - 1];
      // full reorthogonalization keeps the small basis clean
      for (int j = 0; j <= m; ++j) w -= inner(v[j], w) * v[j];
      beta[m] = w.norm();
      if (beta[m] < 1e-14 * beta0 + 1e-300) {
        ++m;
        breakdown = true;
        break;
      }
      v.push_back(w / beta[m]);
    }
    MatXd tri = MatXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      tri(j, j) = alpha[j];
      if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<MatXd> es(tri);
    tau = std::min(tau, total - done);
    for (;;) {
      VecXc c = (es.eigenvectors().cast<cplx>() *
                 (es.eigenvalues().cast<cplx>() * (-I * sign * tau)).array().exp().matrix().asDiagonal() *
                 es.eigenvectors().row(0).transpose().cast<cplx>());
      const double err = breakdown ? 0.0 : beta[m - 1] * std::abs(c[m - 1]) * beta0;
      if (err <= tol * tau || tau < 1e-12 * total) {
        MatXc next = MatXc::Zero(y.rows(), y.cols());
        for (int j = 0; j < m; ++j) next += (beta0 * c[j]) * v[j];
        y = std::move(next);
        done += tau;
        if (err < 0.1 * tol * tau) tau *= 1.5;
        break;
      }
      tau *= 0.5;
    }
  }
  return y;
}

MatXc expmv_taylor(const LinearMap& g, const MatXc& x, double t, double norm_bound) {
  const int steps = std::max(1, int(std::ceil(std::abs(t) * norm_bound / 0.5)));
  const double h = t / steps;
  MatXc y = x;
  for (int s = 0; s < steps; ++s) {
    MatXc term = y, sum = y;
    for (int k = 1; k < 60; ++k) {
      term = g(term) * (h / k);
      sum += term;
      if (term.norm() <= 1e-17 * sum.norm()) break;
    }
    y = std::move(sum);
  }
  return y;
}

}  // namespace nelson

#include "nelson/fock.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace nelson {

namespace {

using Triplet = Eigen::Triplet<cplx>;

void enumerate(int modes, int remaining, int mode, std::vector<std::uint8_t>& cur, int min_total,
               int used, std::vector<std::uint8_t>& out, std::vector<int>& totals) {
  if (mode == modes) {
    if (used >= min_total) {
      out.insert(out.end(), cur.begin(), cur.end());
      totals.push_back(used);
    }
    return;
  }
  for (int n = 0; n <= remaining; ++n) {
    cur[mode] = static_cast<std::uint8_t>(n);
    enumerate(modes, remaining - n, mode + 1, cur, min_total, used + n, out, totals);
  }
  cur[mode] = 0;
}

}  // namespace

long long fock_sector_size(int modes, int n) {
  if (modes == 0) return n == 0 ? 1 : 0;
  // binom(n + modes - 1, modes - 1)
  long double r = 1;
  for (int i = 1; i < modes; ++i) r = r * (n + i) / i;
  return std::llround(r);
}

long long fock_window_size(int modes, int min_total, int max_total) {
  long long s = 0;
  for (int n = min_total; n <= max_total; ++n) s += fock_sector_size(modes, n);
  return s;
}

FockSpace::FockSpace(int modes, int min_total, int max_total)
    : modes_(modes), min_total_(min_total), max_total_(max_total) {
  if (modes < 0 || min_total < 0 || max_total < min_total || max_total > 255)
    throw PreconditionError("FockSpace: invalid mode count or occupation window");
  std::vector<std::uint8_t> cur(modes, 0);
  enumerate(modes, max_total, 0, cur, min_total, 0, occ_, totals_);
  index_.reserve(totals_.size());
  for (int i = 0; i < dim(); ++i) index_.emplace(key(config(i)), i);
}

std::string FockSpace::key(const std::uint8_t* occ) const {
  return std::string(reinterpret_cast<const char*>(occ), modes_);
}

int FockSpace::find(const std::uint8_t* occ) const {
  auto it = index_.find(key(occ));
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> FockSpace::sector(int total) const {
  std::vector<int> out;
  for (int i = 0; i < dim(); ++i)
    if (totals_[i] == total) out.push_back(i);
  return out;
}

VecXd FockSpace::number() const {
  VecXd n(dim());
  for (int i = 0; i < dim(); ++i) n[i] = totals_[i];
  return n;
}

SpMat FockSpace::annihilator(int mode) const {
  std::vector<Triplet> t;
  std::vector<std::uint8_t> buf(modes_);
  for (int i = 0; i < dim(); ++i) {
    const std::uint8_t* c = config(i);
    if (c[mode] == 0) continue;
    std::copy(c, c + modes_, buf.begin());
    buf[mode] -= 1;
    int j = find(buf.data());
    if (j >= 0) t.emplace_back(j, i, std::sqrt(double(c[mode])));
  }
  SpMat a(dim(), dim());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SpMat FockSpace::creator(int mode) const { return SpMat(annihilator(mode).adjoint()); }

SpMat FockSpace::annihilator(const VecXc& f) const {
  SpMat a(dim(), dim());
  for (int j = 0; j < modes_; ++j)
    if (f[j] != 0.0) a += std::conj(f[j]) * annihilator(j);
  return a;
}

SpMat FockSpace::creator(const VecXc& f) const { return SpMat(annihilator(f).adjoint()); }

SpMat FockSpace::one_body(const MatXc& h) const {
  std::vector<Triplet> t;
  std::vector<std::uint8_t> buf(modes_);
  for (int i = 0; i < dim(); ++i) {
    const std::uint8_t* c = config(i);
    for (int q = 0; q < modes_; ++q) {
      if (c[q] == 0) continue;
      for (int p = 0; p < modes_; ++p) {
        cplx hpq = h(p, q);
        if (hpq == 0.0) continue;
        double amp;
        int j;
        if (p == q) {
          amp = c[q];
          j = i;
        } else {
          std::copy(c, c + modes_, buf.begin());
          amp = std::sqrt(double(buf[q]));
          buf[q] -= 1;
          amp *= std::sqrt(double(buf[p]) + 1.0);
          buf[p] += 1;
          j = find(buf.data());
          if (j < 0) continue;
        }
        t.emplace_back(j, i, hpq * amp);
      }
    }
  }
  SpMat m(dim(), dim());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat FockSpace::diagonal(const VecXd& d) const {
  SpMat m(dim(), dim());
  m.reserve(Eigen::VectorXi::Constant(dim(), 1));
  for (int i = 0; i < dim(); ++i)
    if (d[i] != 0.0) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

SpMat FockSpace::identity() const {
  SpMat m(dim(), dim());
  m.setIdentity();
  return m;
}

void KronOperator::add(cplx coeff, SpMat left, SpMat right) {
  if ((left.size() && (left.rows() != left_dim_ || left.cols() != left_dim_)) ||
      (right.size() && (right.rows() != right_dim_ || right.cols() != right_dim_)))
    throw PreconditionError("KronOperator: factor shape mismatch");
  if (coeff == 0.0) return;
  terms_.push_back({coeff, std::move(left), std::move(right)});
}

void KronOperator::append(const KronOperator& other, cplx scale) {
  if (other.left_dim_ != left_dim_ || other.right_dim_ != right_dim_)
    throw PreconditionError("KronOperator: dimension mismatch in append");
  for (const auto& t : other.terms_) add(scale * t.coeff, t.left, t.right);
}

namespace {

// y += c L x, one column of x at a time.
void left_product(const SpMat& l, const MatXc& x, MatXc& y, cplx c) {
  for (Eigen::Index col = 0; col < x.cols(); ++col) {
    const cplx* xc = x.col(col).data();
    cplx* yc = y.col(col).data();
    for (int j = 0; j < l.outerSize(); ++j) {
      const cplx xj = c * xc[j];
      if (xj == 0.0) continue;
      for (SpMat::InnerIterator it(l, j); it; ++it) yc[it.row()] += it.value() * xj;
    }
  }
}

// y += c x R^T: column b of x feeds column a of y with weight R(a, b).
void right_product(const SpMat& r, const MatXc& x, MatXc& y, cplx c) {
  for (int b = 0; b < r.outerSize(); ++b)
    for (SpMat::InnerIterator it(r, b); it; ++it) y.col(it.row()) += (c * it.value()) * x.col(b);
}

}  // namespace

void KronOperator::apply_add(const MatXc& x, MatXc& y, cplx scale) const {
  for (const auto& t : terms_) {
    const cplx c = scale * t.coeff;
    const bool l = t.left.size() > 0, r = t.right.size() > 0;
    if (l && r) {
      MatXc lx = MatXc::Zero(x.rows(), x.cols());
      left_product(t.left, x, lx, 1.0);
      right_product(t.right, lx, y, c);
    } else if (l) {
      left_product(t.left, x, y, c);
    } else if (r) {
      right_product(t.right, x, y, c);
    } else {
      y += c * x;
    }
  }
}

MatXc KronOperator::apply(const MatXc& x) const {
  MatXc y = MatXc::Zero(x.rows(), x.cols());
  apply_add(x, y);
  return y;
}

KronOperator KronOperator::adjoint() const {
  KronOperator out(left_dim_, right_dim_);
  for (const auto& t : terms_)
    out.add(std::conj(t.coeff), t.left.size() ? SpMat(t.left.adjoint()) : SpMat(),
            t.right.size() ? SpMat(t.right.adjoint()) : SpMat());
  return out;
}

SpMat KronOperator::materialize() const {
  SpMat il(left_dim_, left_dim_), ir(right_dim_, right_dim_);
  il.setIdentity();
  ir.setIdentity();
  SpMat out(dim(), dim());
  for (const auto& t : terms_) {
    const SpMat& l = t.left.size() ? t.left : il;
    const SpMat& r = t.right.size() ? t.right : ir;
    out += t.coeff * SpMat(Eigen::kroneckerProduct(r, l));
  }
  return out;
}

double KronOperator::norm_bound() const {
  auto one_norm = [](const SpMat& m) {
    if (m.size() == 0) return 1.0;
    double best = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
      double s = 0.0;
      for (SpMat::InnerIterator it(m, k); it; ++it) s += std::abs(it.value());
      best = std::max(best, s);
    }
    return best;
  };
  auto inf_norm = [&](const SpMat& m) { return m.size() ? one_norm(SpMat(m.transpose())) : 1.0; };
  double s = 0.0;
  // sqrt(||.||_1 ||.||_inf) bounds the spectral norm of each factor.
  for (const auto& t : terms_)
    s += std::abs(t.coeff) * std::sqrt(one_norm(t.left) * inf_norm(t.left)) *
         std::sqrt(one_norm(t.right) * inf_norm(t.right));
  return s;
}

}  // namespace nelson

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

// Occupation-number basis of bosonic Fock space over `modes` single-particle
// modes, restricted to total occupation in [min_total, max_total]. Operators
// that would leave the window are truncated (their matrix elements dropped).
class FockSpace {
 public:
  FockSpace(int modes, int min_total, int max_total);

  int modes() const { return modes_; }
  int dim() const { return static_cast<int>(totals_.size()); }
  int min_total() const { return min_total_; }
  int max_total() const { return max_total_; }

  const std::uint8_t* config(int i) const { return &occ_[std::size_t(i) * modes_]; }
  int occupation(int i, int mode) const { return config(i)[mode]; }
  int total(int i) const { return totals_[i]; }
  // -1 if the configuration is outside the window.
  int find(const std::uint8_t* occ) const;
  std::vector<int> sector(int total) const;

  VecXd number() const;
  SpMat annihilator(int mode) const;
  SpMat creator(int mode) const;
  // a(f) = sum conj(f_j) a_j and a*(f) = sum f_j a_j^*.
  SpMat annihilator(const VecXc& f) const;
  SpMat creator(const VecXc& f) const;
  // dΓ(h) = sum_ij h_ij a_i^* a_j, number conserving.
  SpMat one_body(const MatXc& h) const;
  SpMat diagonal(const VecXd& d) const;
  SpMat identity() const;

 private:
  std::string key(const std::uint8_t* occ) const;

  int modes_;
  int min_total_;
  int max_total_;
  std::vector<std::uint8_t> occ_;
  std::vector<int> totals_;
  std::unordered_map<std::string, int> index_;
};

// Number of configurations of `modes` bosonic modes with total exactly n.
long long fock_sector_size(int modes, int n);
long long fock_window_size(int modes, int min_total, int max_total);

// Operator on a bipartite state stored as a matrix X (rows: left factor,
// columns: right factor), acting as X -> sum_t c_t L_t X R_t^T. An empty
// factor stands for the identity.
struct KronTerm {
  cplx coeff{1.0};
  SpMat left;
  SpMat right;
};

class KronOperator {
 public:
  KronOperator() = default;
  KronOperator(int left_dim, int right_dim) : left_dim_(left_dim), right_dim_(right_dim) {}

  int left_dim() const { return left_dim_; }
  int right_dim() const { return right_dim_; }
  long long dim() const { return (long long)left_dim_ * right_dim_; }
  const std::vector<KronTerm>& terms() const { return terms_; }

  void add(cplx coeff, SpMat left, SpMat right);
  void add_left(cplx coeff, SpMat left) { add(coeff, std::move(left), SpMat()); }
  void add_right(cplx coeff, SpMat right) { add(coeff, SpMat(), std::move(right)); }
  void append(const KronOperator& other, cplx scale = 1.0);

  MatXc apply(const MatXc& x) const;
  // Adds scale * apply(x) to y.
  void apply_add(const MatXc& x, MatXc& y, cplx scale = 1.0) const;
  KronOperator adjoint() const;
  // Materialized matrix acting on the column-major vec(X).
  SpMat materialize() const;
  // Cheap upper bound for the operator norm.
  double norm_bound() const;

 private:
  int left_dim_ = 0;
  int right_dim_ = 0;
  std::vector<KronTerm> terms_;
};

}  // namespace nelson

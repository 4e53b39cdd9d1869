#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nelson {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using SparseMat = Eigen::SparseMatrix<Scalar>;

using VecXd = Vec<double>;
using VecXc = Vec<cplx>;
using MatXd = Mat<double>;
using MatXc = Mat<cplx>;
using SpMat = SparseMat<cplx>;

// Thrown when a caller violates a documented precondition.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical invariant (norm, defect, hermiticity) drifts past
// its configured tolerance.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a basis would exceed the configured size guard.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline VecXc vec(const MatXc& x) { return Eigen::Map<const VecXc>(x.data(), x.size()); }
inline MatXc unvec(const VecXc& v, int rows, int cols) {
  return Eigen::Map<const MatXc>(v.data(), rows, cols);
}

inline cplx inner(const MatXc& a, const MatXc& b) { return (a.conjugate().cwiseProduct(b)).sum(); }

template <class Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace nelson

#ifndef UDISC_TYPES_HPP
#define UDISC_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace udisc {

template <typename Real> using Complex = std::complex<Real>;

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Raised when input data violates a model invariant (bad shape, non-unit
/// state, invalid priors, linearly dependent states, non-group, ...).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when arrays passed to an operation have inconsistent dimensions.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename Real>
Real max_abs(const CMatrix<Real> &a) {
  return a.size() == 0 ? Real(0) : a.cwiseAbs().maxCoeff();
}

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived> &a) {
  return (0.5 * (a + a.adjoint())).eval();
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
template <typename Real>
RVector<Real> hermitian_eigenvalues(const CMatrix<Real> &a) {
  if (a.rows() == 0) return RVector<Real>();
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitian_part(a),
                                                  Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

template <typename Real>
Real lambda_max(const CMatrix<Real> &a) {
  auto ev = hermitian_eigenvalues(a);
  return ev.size() == 0 ? Real(0) : ev(ev.size() - 1);
}

template <typename Real>
Real lambda_min(const CMatrix<Real> &a) {
  auto ev = hermitian_eigenvalues(a);
  return ev.size() == 0 ? Real(0) : ev(0);
}

/// Largest singular value.
template <typename Real>
Real spectral_norm(const CMatrix<Real> &a) {
  if (a.size() == 0) return Real(0);
  Eigen::JacobiSVD<CMatrix<Real>> svd(a);
  return svd.singularValues()(0);
}

} // namespace detail
} // namespace udisc

#endif // UDISC_TYPES_HPP

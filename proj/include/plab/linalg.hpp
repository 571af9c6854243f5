#pragma once

// Dense complex Hermitian linear algebra: eigendecomposition, functional
// calculus, commutators, Schatten norms, corner-compressed traces and the
// double-operator-integral (divided-difference Schur multiplier) transform.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numeric>
#include <sstream>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "plab/errors.hpp"
#include "plab/poly.hpp"

namespace plab {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using CSparse = Eigen::SparseMatrix<std::complex<Real>>;

using ComplexMatrix = CMatrix<double>;
using GeneralOperator = ComplexMatrix;
using SparseOperator = CSparse<double>;

template <typename Derived>
typename Derived::RealScalar max_asymmetry(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// Self-adjoint dense matrix. Construction validates the Hermitian invariant
// relative to the largest entry.
template <typename Real>
class BasicHermitian {
 public:
  using Matrix = CMatrix<Real>;

  explicit BasicHermitian(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
      throw DimensionMismatch("Hermitian operator must be square");
    if (entries_.rows() < 1) throw ValidationError("Hermitian operator must have dim >= 1");
    const Real scale = entries_.cwiseAbs().maxCoeff();
    const Real asym = max_asymmetry(entries_);
    if (asym > Real(1e-12) * scale) {
      std::ostringstream os;
      os << "matrix is not Hermitian: max asymmetry " << asym << " (max entry " << scale << ")";
      throw ValidationError(os.str());
    }
  }

  // Projects onto the Hermitian part; for results of unitary algebra that are
  // Hermitian up to rounding.
  static BasicHermitian hermitian_part(const Matrix& m) {
    return BasicHermitian(Matrix((m + m.adjoint()) * Real(0.5)), 0);
  }

  static BasicHermitian identity(Eigen::Index n) {
    return BasicHermitian(Matrix::Identity(n, n), 0);
  }

  static BasicHermitian diagonal(const RVector<Real>& d) {
    return BasicHermitian(Matrix(d.template cast<std::complex<Real>>().asDiagonal()), 0);
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

 private:
  BasicHermitian(Matrix entries, int) : entries_(std::move(entries)) {}
  Matrix entries_;
};

using HermitianOperator = BasicHermitian<double>;

template <typename Real>
struct BasicSpectralDecomposition {
  RVector<Real> eigenvalues;   // ascending
  CMatrix<Real> eigenvectors;  // unitary, columns matched to eigenvalues

  Eigen::Index dim() const { return eigenvalues.size(); }

  CMatrix<Real> reconstruct() const {
    return eigenvectors * eigenvalues.template cast<std::complex<Real>>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

using SpectralDecomposition = BasicSpectralDecomposition<double>;

// Eigenvalues ascending; equal eigenvalues keep the solver's column order.
template <typename Real>
BasicSpectralDecomposition<Real> eigh(const BasicHermitian<Real>& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw InvariantViolation("eigh", "eigensolver did not converge");
  const Eigen::Index n = h.dim();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  const auto& vals = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return vals(i) < vals(j); });
  BasicSpectralDecomposition<Real> d;
  d.eigenvalues.resize(n);
  d.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    d.eigenvalues(k) = vals(src);
    d.eigenvectors.col(k) = solver.eigenvectors().col(src);
  }
  return d;
}

// Ascending eigenvalues only.
template <typename Real>
RVector<Real> eigvalsh(const BasicHermitian<Real>& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(h.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvariantViolation("eigh", "eigensolver did not converge");
  RVector<Real> v = solver.eigenvalues();
  std::sort(v.data(), v.data() + v.size());
  return v;
}

template <typename Real>
Real reconstruction_error(const BasicSpectralDecomposition<Real>& d, const BasicHermitian<Real>& h) {
  return (d.reconstruct() - h.matrix()).norm();
}

template <typename Real>
Real unitarity_error(const BasicSpectralDecomposition<Real>& d) {
  return (d.eigenvectors.adjoint() * d.eigenvectors - CMatrix<Real>::Identity(d.dim(), d.dim())).norm();
}

// U f(Lambda) U* for an arbitrary scalar function f; always the general (complex) result.
template <typename Real, typename F>
  requires std::invocable<const F&, Real>
CMatrix<Real> apply_function_general(const BasicSpectralDecomposition<Real>& d, const F& f) {
  CVector<Real> fv(d.dim());
  for (Eigen::Index k = 0; k < d.dim(); ++k) fv(k) = std::complex<Real>(f(d.eigenvalues(k)));
  return d.eigenvectors * fv.asDiagonal() * d.eigenvectors.adjoint();
}

// U f(Lambda) U* for a real-valued f.
template <typename Real, typename F>
  requires std::invocable<const F&, Real> &&
           std::is_floating_point_v<std::invoke_result_t<const F&, Real>>
BasicHermitian<Real> apply_function(const BasicSpectralDecomposition<Real>& d, const F& f) {
  return BasicHermitian<Real>::hermitian_part(apply_function_general(d, f));
}

// Polynomial functional calculus. Requires real coefficients for a Hermitian result.
template <typename Real>
BasicHermitian<Real> apply_function(const BasicSpectralDecomposition<Real>& d, const BasicPoly<Real>& f) {
  if (!f.is_real())
    throw ValidationError("apply_function: complex coefficients give a non-Hermitian result; use apply_function_general");
  return apply_function(d, [&f](Real x) { return f.real_at(x); });
}

// Direct Horner evaluation p(A) for dense or sparse square A.
template <typename MatrixType, typename Real>
MatrixType polynomial_of(const MatrixType& a, const BasicPoly<Real>& p) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("polynomial_of needs a square matrix");
  MatrixType id(n, n);
  id.setIdentity();
  const auto& c = p.coefficients();
  MatrixType acc(n, n);
  acc.setZero();
  if (c.empty()) return acc;
  acc = id * c.back();
  for (std::size_t k = c.size() - 1; k-- > 0;) {
    MatrixType next = acc * a;
    acc = next + id * c[k];
  }
  return acc;
}

// e^{i psi(Y)} X e^{-i psi(Y)} computed as W X W*, W = U diag(e^{i psi(y_j)}) U*.
template <typename Real, typename F>
  requires std::invocable<const F&, Real>
BasicHermitian<Real> unitary_conjugate(const BasicHermitian<Real>& x, const F& psi,
                                       const BasicSpectralDecomposition<Real>& yd) {
  if (x.dim() != yd.dim()) throw DimensionMismatch("unitary_conjugate: dimension mismatch");
  CVector<Real> phase(yd.dim());
  for (Eigen::Index k = 0; k < yd.dim(); ++k)
    phase(k) = std::polar(Real(1), std::real(std::complex<Real>(psi(yd.eigenvalues(k)))));
  // A constant phase commutes with everything.
  if ((phase.array() == phase(0)).all()) return x;
  const CMatrix<Real>& u = yd.eigenvectors;
  // In Y's eigenbasis conjugation is entrywise multiplication by phase_i conj(phase_j).
  CMatrix<Real> xt = u.adjoint() * x.matrix() * u;
  for (Eigen::Index j = 0; j < xt.cols(); ++j)
    for (Eigen::Index i = 0; i < xt.rows(); ++i) xt(i, j) *= phase(i) * std::conj(phase(j));
  return BasicHermitian<Real>::hermitian_part(u * xt * u.adjoint());
}

template <typename Real>
BasicHermitian<Real> unitary_conjugate(const BasicHermitian<Real>& x, const BasicPoly<Real>& psi,
                                       const BasicSpectralDecomposition<Real>& yd) {
  if (!psi.is_real()) throw ValidationError("unitary_conjugate needs a real-valued psi");
  return unitary_conjugate(x, [&psi](Real t) { return psi.real_at(t); }, yd);
}

template <typename A, typename B>
auto commutator(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("commutator: dimension mismatch");
  return (a * b - b * a).eval();
}

template <typename Real>
CMatrix<Real> commutator(const BasicHermitian<Real>& a, const BasicHermitian<Real>& b) {
  return commutator(a.matrix(), b.matrix());
}

template <typename A>
auto trace(const A& a) {
  using Scalar = typename A::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = a.diagonal();
  return d.sum();
}

// Sum of the first n diagonal entries: the finite-dimensional surrogate for the
// trace of an operator whose relevant part lives in the leading corner.
template <typename A>
auto corner_trace(const A& a, Eigen::Index n) {
  if (n > std::min(a.rows(), a.cols()) || n < 0) {
    std::ostringstream os;
    os << "corner_trace: window " << n << " exceeds dimension " << a.rows();
    throw DimensionMismatch(os.str());
  }
  using Scalar = typename A::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = a.diagonal();
  return d.head(n).sum();
}

// Schatten-1 norm (sum of singular values).
template <typename Derived>
typename Derived::RealScalar trace_norm(const Eigen::MatrixBase<Derived>& a) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::BDCSVD<M> svd(M(a), 0);
  return svd.singularValues().sum();
}

template <typename Real>
Real trace_norm(const BasicHermitian<Real>& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(a.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum();
}

template <typename Derived>
typename Derived::RealScalar hs_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

// Divided-difference kernel at eigenvalues, with near-coincident pairs
// evaluated at their midpoint derivative.
template <typename Real>
std::complex<Real> doi_kernel(const BasicPoly<Real>& psi, Real yi, Real yj) {
  const Real tol = Real(1e-8) * std::max({Real(1), std::abs(yi), std::abs(yj)});
  if (std::abs(yi - yj) < tol) {
    const Real mid = Real(0.5) * (yi + yj);
    return divided_difference(psi, mid, mid);
  }
  return divided_difference(psi, yi, yj);
}

// Schur multiplication by psi~(y_i, y_j) in Y's eigenbasis. For K = -i[Y,X]
// this returns -i[psi(Y), X].
template <typename Real, typename Derived>
CMatrix<Real> doi_transform(const BasicSpectralDecomposition<Real>& yd,
                            const Eigen::MatrixBase<Derived>& k, const BasicPoly<Real>& psi) {
  if (k.rows() != yd.dim() || k.cols() != yd.dim())
    throw DimensionMismatch("doi_transform: dimension mismatch");
  const CMatrix<Real>& u = yd.eigenvectors;
  CMatrix<Real> kt = u.adjoint() * k * u;
  for (Eigen::Index j = 0; j < kt.cols(); ++j)
    for (Eigen::Index i = 0; i < kt.rows(); ++i)
      kt(i, j) *= doi_kernel(psi, yd.eigenvalues(i), yd.eigenvalues(j));
  return u * kt * u.adjoint();
}

}  // namespace plab

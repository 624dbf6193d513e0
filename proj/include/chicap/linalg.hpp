#pragma once

#include <algorithm>
#include <cmath>

#include "chicap/core.hpp"
#include "chicap/errors.hpp"

namespace chicap::linalg {

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
struct Spectrum {
  RealVector values;
  Matrix vectors;  // columns are eigenvectors

  [[nodiscard]] Eigen::Index size() const { return values.size(); }
  [[nodiscard]] double max() const { return values.size() ? values.maxCoeff() : 0.0; }
};

inline Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// The single spectral primitive. Symmetrizes before decomposing.
inline Spectrum eigh(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigh: matrix is not square");
  if (a.rows() == 0) return {RealVector(0), Matrix(0, 0)};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(a));
  if (solver.info() != Eigen::Success) throw NumericalInconsistency("eigh: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector eigvalsh(const Matrix& a) {
  if (a.rows() == 0) return RealVector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalInconsistency("eigvalsh: eigensolver did not converge");
  return solver.eigenvalues();
}

inline double hermiticity_defect(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// V f(diag) V^dagger.
template <class F>
Matrix spectral_apply(const Spectrum& s, F&& f) {
  RealVector fv = s.values.unaryExpr(std::forward<F>(f));
  return s.vectors * fv.asDiagonal() * s.vectors.adjoint();
}

/// Natural log with the 0 log 0 = 0 convention: eigenvalues at or below
/// `floor` map to zero.
inline Matrix log_psd(const Spectrum& s, double floor) {
  return spectral_apply(s, [floor](double x) { return x > floor ? std::log(x) : 0.0; });
}

/// Natural log with eigenvalues clamped from below at `floor`. Used where a
/// large finite penalty stands in for an infinite one.
inline Matrix log_clamped(const Spectrum& s, double floor) {
  return spectral_apply(s, [floor](double x) { return std::log(std::max(x, floor)); });
}

inline double trace_norm(const Matrix& a) { return eigvalsh(a).cwiseAbs().sum(); }

inline double real_trace(const Matrix& a) { return a.trace().real(); }

/// Re Tr(A B) without forming the product.
inline double trace_product(const Matrix& a, const Matrix& b) {
  return (a.transpose().cwiseProduct(b)).sum().real();
}

/// Orthonormalize the columns of `a` (thin QR).
inline Matrix orthonormal_columns(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  // Fix phases so that R has a nonnegative diagonal.
  const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

}  // namespace chicap::linalg

#pragma once

// Entropy and relative entropy of (possibly unnormalized) positive operators,
// plus the projector compressions used for finite-rank truncation.
//
// All logarithms are evaluated in nats internally and converted to the base
// selected in NumericConfig (bits by default) on the way out.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chicap/core.hpp"
#include "chicap/errors.hpp"
#include "chicap/linalg.hpp"

namespace chicap {

/// Hermitian positive-semidefinite operator, trace unconstrained.
class PositiveOperator {
 public:
  PositiveOperator() = default;

  /// Validates Hermiticity (tol_herm) and positivity (tol_psd), then stores
  /// the symmetrized matrix.
  explicit PositiveOperator(const Matrix& m, const NumericConfig& cfg = default_config()) {
    if (m.rows() != m.cols()) throw DimensionMismatch("positive operator must be square");
    const double defect = linalg::hermiticity_defect(m);
    if (defect > cfg.tol_herm) throw NotHermitian("operator is not Hermitian (defect " + std::to_string(defect) + ")");
    m_ = linalg::hermitize(m);
    if (m_.rows() > 0) {
      const double lmin = linalg::eigvalsh(m_).minCoeff();
      if (lmin < -cfg.tol_psd) throw NotPositive("operator has eigenvalue " + std::to_string(lmin));
    }
  }

  /// Skips the positivity check; for values produced by trusted arithmetic
  /// (channel outputs, convex combinations).
  static PositiveOperator trusted(const Matrix& m) {
    PositiveOperator p;
    p.m_ = linalg::hermitize(m);
    return p;
  }

  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }
  [[nodiscard]] double trace() const { return linalg::real_trace(m_); }

 protected:
  Matrix m_;
};

/// Unit-trace positive operator.
class DensityMatrix : public PositiveOperator {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(const Matrix& m, const NumericConfig& cfg = default_config()) : PositiveOperator(m, cfg) {
    if (m_.rows() == 0) throw NonState("density matrix must have positive dimension");
    const double t = trace();
    if (std::abs(t - 1.0) > cfg.tol_trace) throw NonState("density matrix trace is " + std::to_string(t));
  }

  static DensityMatrix trusted(const Matrix& m) {
    DensityMatrix d;
    d.m_ = linalg::hermitize(m);
    return d;
  }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const Vector& psi) {
    const double n = psi.squaredNorm();
    if (!(n > 0)) throw NonState("pure state from zero vector");
    return trusted(psi * psi.adjoint() / n);
  }

  static DensityMatrix basis(Eigen::Index dim, Eigen::Index k) {
    if (k < 0 || k >= dim) throw InvalidArgument("basis index out of range");
    Vector e = Vector::Zero(dim);
    e(k) = 1.0;
    return pure(e);
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    if (dim <= 0) throw NonState("dimension must be positive");
    return trusted(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  /// Diagonal state from a probability vector.
  static DensityMatrix diagonal(std::span<const double> p, const NumericConfig& cfg = default_config()) {
    RealVector v(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) v(static_cast<Eigen::Index>(i)) = p[i];
    return DensityMatrix(v.cast<cplx>().asDiagonal().toDenseMatrix(), cfg);
  }
};

/// Orthogonal projector stored by an orthonormal column basis of its range.
class Projector {
 public:
  Projector() = default;

  /// Validates orthonormality of the columns.
  explicit Projector(const Matrix& columns, double tol = 1e-10) : cols_(columns) {
    if (cols_.cols() > cols_.rows()) throw NotProjector("more basis columns than dimension");
    if (cols_.cols() > 0) {
      const Matrix gram = cols_.adjoint() * cols_;
      const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      if (err > tol) throw NotProjector("basis columns are not orthonormal (error " + std::to_string(err) + ")");
    }
  }

  static Projector identity(Eigen::Index dim) { return Projector(Matrix::Identity(dim, dim)); }

  /// Projector onto the span of the given standard basis vectors, in order.
  static Projector standard(Eigen::Index dim, std::span<const Eigen::Index> indices) {
    Matrix c = Matrix::Zero(dim, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
      if (indices[j] < 0 || indices[j] >= dim) throw InvalidArgument("projector index out of range");
      c(indices[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return Projector(c);
  }

  /// First `rank` standard basis vectors.
  static Projector leading(Eigen::Index dim, Eigen::Index rank) {
    if (rank < 0 || rank > dim) throw InvalidArgument("projector rank out of range");
    return Projector(Matrix::Identity(dim, rank));
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return cols_.rows(); }
  [[nodiscard]] Eigen::Index rank() const noexcept { return cols_.cols(); }
  [[nodiscard]] const Matrix& columns() const noexcept { return cols_; }
  [[nodiscard]] Matrix matrix() const { return cols_ * cols_.adjoint(); }

 private:
  Matrix cols_;
};

namespace detail {

// Neumaier-compensated sum.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline void check_spectrum_positive(const RealVector& values, const NumericConfig& cfg) {
  if (values.size() && values.minCoeff() < -cfg.tol_psd)
    throw NotPositive("operator has eigenvalue " + std::to_string(values.minCoeff()));
}

/// -sum lambda log(lambda / T) in nats over eigenvalues above the rank threshold.
template <class Range>
double entropy_nats(const Range& values, double tol_rank) {
  double lmax = 0.0;
  for (double x : values) lmax = std::max(lmax, x);
  if (lmax <= 0.0) return 0.0;
  const double cut = tol_rank * lmax;
  Accumulator tr;
  for (double x : values)
    if (x > cut) tr.add(x);
  const double t = tr.value();
  Accumulator h;
  for (double x : values)
    if (x > cut) h.add(-x * std::log(x / t));
  return std::max(0.0, h.value());
}

inline double relative_entropy_nats(const Matrix& a, const Matrix& b, const NumericConfig& cfg) {
  if (a.rows() != b.rows()) throw DimensionMismatch("relative_entropy: operators have different dimensions");
  const linalg::Spectrum sa = linalg::eigh(a);
  const linalg::Spectrum sb = linalg::eigh(b);
  check_spectrum_positive(sa.values, cfg);
  check_spectrum_positive(sb.values, cfg);

  const double tr_a = sa.values.cwiseMax(0.0).sum();
  const double tr_b = sb.values.cwiseMax(0.0).sum();
  const double bmax = sb.max();
  if (bmax <= 0.0) {
    if (tr_a > cfg.tol_leak) return std::numeric_limits<double>::infinity();
    return std::max(0.0, tr_b - tr_a);  // both vanish
  }

  // Diagonal of A in B's eigenbasis.
  const RealVector a_in_b = (sb.vectors.adjoint() * a * sb.vectors).diagonal().real();
  const double cut_b = cfg.tol_rank * bmax;
  Accumulator inside, a_log_b;
  for (Eigen::Index j = 0; j < sb.size(); ++j) {
    if (sb.values(j) > cut_b) {
      inside.add(a_in_b(j));
      a_log_b.add(a_in_b(j) * std::log(sb.values(j)));
    }
  }
  if (tr_a - inside.value() > cfg.tol_leak) return std::numeric_limits<double>::infinity();

  Accumulator a_log_a;
  const double amax = sa.max();
  for (Eigen::Index i = 0; i < sa.size(); ++i)
    if (sa.values(i) > cfg.tol_rank * amax) a_log_a.add(sa.values(i) * std::log(sa.values(i)));

  const double d = a_log_a.value() - a_log_b.value() + tr_b - tr_a;
  return std::max(0.0, d);
}

}  // namespace detail

/// Entropy Tr A log Tr A - Tr A log A of a positive operator; the von Neumann
/// entropy when Tr A = 1. Always finite at finite dimension.
inline ExtReal entropy(const PositiveOperator& a, const NumericConfig& cfg = default_config()) {
  const RealVector ev = linalg::eigvalsh(a.matrix());
  detail::check_spectrum_positive(ev, cfg);
  return ExtReal(detail::entropy_nats(ev, cfg.tol_rank) * cfg.from_nats());
}

/// Entropy of a positive operator given directly by its eigenvalues. Lets
/// diagonal states of very large effective dimension skip the dense matrix.
inline double entropy_of_spectrum(std::span<const double> eigenvalues, const NumericConfig& cfg = default_config()) {
  for (double x : eigenvalues)
    if (x < -cfg.tol_psd) throw NotPositive("spectrum has negative entry " + std::to_string(x));
  return detail::entropy_nats(eigenvalues, cfg.tol_rank) * cfg.from_nats();
}

/// Tr(A log A - A log B + B - A), or +inf when supp A is not inside supp B.
///
/// Support of B is decided by the relative threshold tol_rank; mass of A
/// outside it up to tol_leak is projected away.
inline ExtReal relative_entropy(const PositiveOperator& a, const PositiveOperator& b,
                                const NumericConfig& cfg = default_config()) {
  const double d = detail::relative_entropy_nats(a.matrix(), b.matrix(), cfg);
  if (std::isinf(d)) return ExtReal::infinity();
  return ExtReal(d * cfg.from_nats());
}

/// P A P restricted to range(P), as a rank(P)-dimensional operator.
inline PositiveOperator compress(const PositiveOperator& a, const Projector& p) {
  if (a.dim() != p.dim()) throw DimensionMismatch("compress: operator and projector dimensions differ");
  return PositiveOperator::trusted(p.columns().adjoint() * a.matrix() * p.columns());
}

/// Projector onto eigenvectors with eigenvalue > tol_rank * lambda_max,
/// columns ordered by decreasing eigenvalue.
inline Projector support_projector(const PositiveOperator& a, double tol_rank = 1e-12,
                                   const NumericConfig& cfg = default_config()) {
  const linalg::Spectrum s = linalg::eigh(a.matrix());
  detail::check_spectrum_positive(s.values, cfg);
  const double cut = tol_rank * s.max();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = s.size() - 1; i >= 0; --i)
    if (s.max() > 0 && s.values(i) > cut) keep.push_back(i);
  Matrix cols(a.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) cols.col(static_cast<Eigen::Index>(j)) = s.vectors.col(keep[j]);
  return Projector(cols);
}

inline double trace_distance(const PositiveOperator& a, const PositiveOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("trace_distance: dimensions differ");
  return linalg::trace_norm(a.matrix() - b.matrix());
}

/// Binary entropy in the configured base.
inline double binary_entropy(double x, const NumericConfig& cfg = default_config()) {
  const auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  return (term(x) + term(1.0 - x)) * cfg.from_nats();
}

}  // namespace chicap

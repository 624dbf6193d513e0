#pragma once

// Channels in Kraus form. Classical channels are a diagonal special case built
// from a column-stochastic matrix T: output_j = sum_i T(j, i) * input_i.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/errors.hpp"
#include "chicap/linalg.hpp"

namespace chicap {

enum class ChannelKind { general, classical };

class Channel {
 public:
  Channel() = default;

  Channel(Eigen::Index dim_in, Eigen::Index dim_out, std::vector<Matrix> kraus)
      : dim_in_(dim_in), dim_out_(dim_out), kraus_(std::move(kraus)) {
    if (dim_in <= 0 || dim_out <= 0) throw InvalidArgument("channel dimensions must be positive");
    if (kraus_.empty()) throw InvalidArgument("channel needs at least one Kraus operator");
    for (const Matrix& k : kraus_)
      if (k.rows() != dim_out || k.cols() != dim_in)
        throw DimensionMismatch("Kraus operator shape does not match dim_out x dim_in");
  }

  static Channel identity(Eigen::Index dim) { return Channel(dim, dim, {Matrix::Identity(dim, dim)}); }

  [[nodiscard]] Eigen::Index dim_in() const noexcept { return dim_in_; }
  [[nodiscard]] Eigen::Index dim_out() const noexcept { return dim_out_; }
  [[nodiscard]] const std::vector<Matrix>& kraus() const noexcept { return kraus_; }
  [[nodiscard]] ChannelKind kind() const noexcept { return stochastic_ ? ChannelKind::classical : ChannelKind::general; }
  [[nodiscard]] bool is_validated() const noexcept { return validated_; }
  /// Column-stochastic matrix of a classical channel.
  [[nodiscard]] const std::optional<RealMatrix>& stochastic() const noexcept { return stochastic_; }

 private:
  friend Channel classical_channel(const RealMatrix& t, double tol);
  friend Channel validate_channel(const Channel& channel, double tol_tp);

  Eigen::Index dim_in_ = 0;
  Eigen::Index dim_out_ = 0;
  std::vector<Matrix> kraus_;
  std::optional<RealMatrix> stochastic_;
  bool validated_ = false;
};

/// Operator norm of sum_k K_k^dagger K_k - I.
inline double trace_preservation_defect(const Channel& channel) {
  Matrix s = Matrix::Zero(channel.dim_in(), channel.dim_in());
  for (const Matrix& k : channel.kraus()) s.noalias() += k.adjoint() * k;
  s -= Matrix::Identity(channel.dim_in(), channel.dim_in());
  return linalg::eigvalsh(s).cwiseAbs().maxCoeff();
}

/// Checks trace preservation and returns a copy tagged as validated.
inline Channel validate_channel(const Channel& channel, double tol_tp = 1e-9) {
  const double defect = trace_preservation_defect(channel);
  if (!(defect <= tol_tp))
    throw NotTracePreserving("channel is not trace preserving: ||sum K^dag K - I|| = " + std::to_string(defect), defect);
  Channel out = channel;
  out.validated_ = true;
  return out;
}

/// Classical channel from a column-stochastic matrix T (T(j, i) = P(j | i)),
/// with Kraus set {sqrt(T(j, i)) |j><i|}. The result is validated.
inline Channel classical_channel(const RealMatrix& t, double tol = 1e-9) {
  if (t.rows() == 0 || t.cols() == 0) throw NotStochastic("stochastic matrix is empty");
  if (t.minCoeff() < 0.0) throw NotStochastic("stochastic matrix has a negative entry");
  for (Eigen::Index i = 0; i < t.cols(); ++i) {
    const double s = t.col(i).sum();
    if (std::abs(s - 1.0) > tol)
      throw NotStochastic("column " + std::to_string(i) + " sums to " + std::to_string(s));
  }
  std::vector<Matrix> kraus;
  for (Eigen::Index i = 0; i < t.cols(); ++i)
    for (Eigen::Index j = 0; j < t.rows(); ++j)
      if (t(j, i) > 0.0) {
        Matrix k = Matrix::Zero(t.rows(), t.cols());
        k(j, i) = std::sqrt(t(j, i));
        kraus.push_back(std::move(k));
      }
  Channel ch(t.cols(), t.rows(), std::move(kraus));
  ch.stochastic_ = t;
  return validate_channel(ch, tol);
}

/// Channel sending every input state to `sigma`.
inline Channel constant_channel(Eigen::Index dim_in, const DensityMatrix& sigma) {
  const linalg::Spectrum s = linalg::eigh(sigma.matrix());
  std::vector<Matrix> kraus;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s.values(j) <= 0.0) continue;
    for (Eigen::Index k = 0; k < dim_in; ++k) {
      Matrix op = Matrix::Zero(sigma.dim(), dim_in);
      op.col(k) = std::sqrt(s.values(j)) * s.vectors.col(j);
      kraus.push_back(std::move(op));
    }
  }
  return validate_channel(Channel(dim_in, sigma.dim(), std::move(kraus)));
}

/// sum_k K_k X K_k^dagger for an arbitrary input operator X.
inline Matrix apply_operator(const Channel& channel, const Matrix& x) {
  if (x.rows() != channel.dim_in() || x.cols() != channel.dim_in())
    throw DimensionMismatch("channel input dimension does not match operator");
  if (const auto& t = channel.stochastic()) {
    const Eigen::VectorXcd out = t->cast<cplx>() * x.diagonal();
    return out.asDiagonal();
  }
  Matrix out = Matrix::Zero(channel.dim_out(), channel.dim_out());
  for (const Matrix& k : channel.kraus()) out.noalias() += k * x * k.adjoint();
  return out;
}

/// Heisenberg-picture map sum_k K_k^dagger Y K_k.
inline Matrix apply_adjoint(const Channel& channel, const Matrix& y) {
  if (y.rows() != channel.dim_out() || y.cols() != channel.dim_out())
    throw DimensionMismatch("channel output dimension does not match operator");
  Matrix out = Matrix::Zero(channel.dim_in(), channel.dim_in());
  for (const Matrix& k : channel.kraus()) out.noalias() += k.adjoint() * y * k;
  return out;
}

inline DensityMatrix apply(const Channel& channel, const DensityMatrix& rho) {
  return DensityMatrix::trusted(apply_operator(channel, rho.matrix()));
}

inline PositiveOperator apply(const Channel& channel, const PositiveOperator& a) {
  return PositiveOperator::trusted(apply_operator(channel, a.matrix()));
}

inline ExtReal output_entropy(const Channel& channel, const DensityMatrix& rho, const NumericConfig& cfg = default_config()) {
  return entropy(apply(channel, rho), cfg);
}

}  // namespace chicap

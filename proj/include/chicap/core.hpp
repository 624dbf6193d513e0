#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

namespace chicap {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

enum class LogBase { bits, nats };

/// Numerical tolerances shared by every module. All fields can be overridden
/// per call; the defaults are the ones the acceptance numbers are pinned to.
struct NumericConfig {
  double tol_herm = 1e-10;
  double tol_psd = 1e-10;
  double tol_trace = 1e-9;
  /// Relative eigenvalue threshold deciding numerical rank/support.
  double tol_rank = 1e-12;
  /// Mass of A outside supp(B) that relative entropy still projects away.
  double tol_leak = 1e-10;
  LogBase log_base = LogBase::bits;

  /// Factor converting a quantity in nats into the configured base.
  [[nodiscard]] double from_nats() const noexcept {
    return log_base == LogBase::bits ? 1.0 / std::numbers::ln2 : 1.0;
  }
};

inline const NumericConfig& default_config() {
  static const NumericConfig cfg{};
  return cfg;
}

/// Nonnegative extended real: a finite value or +infinity.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr explicit ExtReal(double v) : value_(v) {}

  static constexpr ExtReal infinity() {
    return ExtReal(std::numeric_limits<double>::infinity());
  }

  [[nodiscard]] constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
  [[nodiscard]] constexpr bool is_finite() const { return !is_infinite(); }
  /// The value as a double; +inf for the infinite marker.
  [[nodiscard]] constexpr double value() const { return value_; }

  friend constexpr bool operator==(ExtReal a, ExtReal b) = default;
  friend constexpr auto operator<=>(ExtReal a, ExtReal b) { return a.value_ <=> b.value_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) { return ExtReal(a.value_ + b.value_); }
  friend ExtReal operator*(double w, ExtReal a) {
    // 0 * inf = 0 (measure-theoretic convention)
    if (w == 0.0) return ExtReal(0.0);
    return ExtReal(w * a.value_);
  }

  friend std::ostream& operator<<(std::ostream& os, ExtReal x) {
    if (x.is_infinite()) return os << "inf";
    return os << x.value_;
  }

 private:
  double value_ = 0.0;
};

}  // namespace chicap

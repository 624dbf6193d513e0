#pragma once

// The noiseless classical channel on l_1 whose energy-type constraint set has
// no optimal generalized ensemble. States rho_n = diag(1 - q_n, q_n/n, ...,
// q_n/n) with q_n = g(n), where g solves g (1 - ln(g/x)) = ln 2.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/errors.hpp"
#include "chicap/parallel.hpp"

namespace chicap::counterexample {

/// g (1 - ln(g / x)) - ln 2.
inline double g_equation(double g, double x) { return g * (1.0 - std::log(g / x)) - std::numbers::ln2; }

/// Root g in (0, 1] of the implicit equation, for x >= 1. The left side is
/// increasing in g on (0, x), so the root is bracketed by [1e-18, 1].
inline double solve_g(double x, double tol = 1e-14) {
  if (!(x >= 1.0) || !std::isfinite(x)) throw InvalidArgument("solve_g: x must be a finite number >= 1");
  double lo = 1e-18, hi = 1.0;
  if (g_equation(lo, x) > 0.0 || g_equation(hi, x) < 0.0) throw NoRoot("solve_g: root not bracketed");
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (g_equation(mid, x) < 0.0 ? lo : hi) = mid;
  }
  double g = 0.5 * (lo + hi);
  for (int it = 0; it < 50 && std::abs(g_equation(g, x)) > tol; ++it) {
    const double step = g_equation(g, x) / (-std::log(g / x));
    g = std::clamp(g - step, lo, hi);
  }
  if (std::abs(g_equation(g, x)) > tol) throw NoRoot("solve_g: residual did not reach tolerance");
  return g;
}

/// |ln(g/x) g' - g/x| with g' from a central difference of step delta.
inline double g_ode_residual(double x, double delta) {
  if (!(delta > 0.0) || !(x >= 1.0 + delta)) throw InvalidArgument("g_ode_residual: need delta > 0 and x >= 1 + delta");
  const double g = solve_g(x);
  const double dg = (solve_g(x + delta) - solve_g(x - delta)) / (2.0 * delta);
  return std::abs(std::log(g / x) * dg - g / x);
}

/// Spectrum of rho_n: 1 - q_n followed by n copies of q_n / n.
inline std::vector<double> rho_n_spectrum(long long n) {
  if (n < 1) throw InvalidArgument("rho_n: n must be >= 1");
  const double q = solve_g(static_cast<double>(n));
  std::vector<double> p(static_cast<std::size_t>(n) + 1, q / static_cast<double>(n));
  p[0] = 1.0 - q;
  return p;
}

/// rho_n as a dense diagonal density matrix of dimension n + 1.
inline DensityMatrix state_rho_n(long long n) {
  constexpr long long dense_limit = 4096;
  if (n > dense_limit) throw InvalidArgument("state_rho_n: use rho_n_spectrum above n = 4096");
  const std::vector<double> p = rho_n_spectrum(n);
  return DensityMatrix::diagonal(p);
}

/// h2(q) + q log2 n, the entropy of rho_n in bits.
inline double h_value(long long n, double q) {
  return binary_entropy(q) + q * std::log2(static_cast<double>(n));
}

struct CounterexamplePoint {
  long long n = 1;
  double q_n = 0.0;
  double h_value = 0.0;
  long long state_dim = 2;
  /// Residual of the implicit equation at x = n.
  double residual = 0.0;
};

inline CounterexamplePoint point(long long n) {
  if (n < 1) throw InvalidArgument("counterexample point: n must be >= 1");
  const double q = solve_g(static_cast<double>(n));
  return {n, q, counterexample::h_value(n, q), n + 1, std::abs(g_equation(q, static_cast<double>(n)))};
}

/// 1, 10, 100, ... up to n_max, with n_max appended when it is not a power of ten.
inline std::vector<long long> log_grid(long long n_max) {
  if (n_max < 1) throw InvalidArgument("log_grid: n_max must be >= 1");
  std::vector<long long> grid;
  for (long long n = 1; n <= n_max; n *= 10) {
    grid.push_back(n);
    if (n > n_max / 10) break;
  }
  if (grid.back() != n_max) grid.push_back(n_max);
  return grid;
}

inline std::vector<CounterexamplePoint> h_sequence(long long n_max, const std::vector<long long>& grid, unsigned threads = 0) {
  if (grid.empty()) throw InvalidArgument("h_sequence: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw InvalidArgument("h_sequence: grid values must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument("h_sequence: grid must be strictly ascending");
  }
  if (grid.back() > n_max) throw InvalidArgument("h_sequence: grid exceeds n_max");
  return detail::parallel_map(grid.size(), threads, [&](std::size_t i) { return point(grid[i]); });
}

struct GapReport {
  long long n_max = 0;
  /// h_value(n_max), a lower estimate of the constrained capacity (limit 1).
  double capacity_estimate = 0.0;
  /// chi of the limit state diag(1, 0, ...), which is exactly 0.
  double chi_limit_state = 0.0;
  double gap = 0.0;
  std::string conclusion;
  std::vector<CounterexamplePoint> points;
};

inline GapReport gap_report(long long n_max, unsigned threads = 0) {
  if (n_max < 10) throw InvalidArgument("gap_report: n_max must be >= 10");
  GapReport r;
  r.n_max = n_max;
  r.points = h_sequence(n_max, log_grid(n_max), threads);
  r.capacity_estimate = r.points.back().h_value;
  // The limit state is pure; on the noiseless channel its only ensemble is
  // the single atom, whose chi is the output entropy of a pure state.
  r.chi_limit_state = chi(Channel::identity(2), Ensemble::single(DensityMatrix::basis(2, 0))).value();
  r.gap = r.capacity_estimate - r.chi_limit_state;
  r.conclusion =
      "No optimal generalized ensemble exists: chi along rho_n increases toward the capacity 1, while the "
      "limit state rho* = diag(1, 0, ...) has chi = 0.";
  return r;
}

}  // namespace chicap::counterexample

#pragma once

// Constrained chi-capacity by conditional-gradient support exchange.
//
// Outer loop: optimize weights on a finite pure-state support, then probe for
// the pure state farthest (in output relative entropy, minus the Lagrangian
// energy penalty) from the current output average and add it. The probe value
// is also the optimality certificate, so the loop stops exactly when the
// maximal-distance condition holds to tol_gap.
//
// Internally everything is in nats; reports are in bits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/energy.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/errors.hpp"
#include "chicap/linalg.hpp"
#include "chicap/parallel.hpp"
#include "chicap/random.hpp"

namespace chicap {

struct SolverOptions {
  int max_outer_iters = 200;
  /// Stopping tolerance on the certificate gap, in bits.
  double tol_gap = 1e-6;
  /// KKT residual target of the inner weight optimization, in bits.
  double tol_weights = 1e-10;
  int n_probe_starts = 8;
  std::uint64_t seed = 0;
  int lagrange_bisection_iters = 100;
  int max_inner_iters = 20000;
  int max_probe_iters = 500;
  /// Worker cap for probe multi-starts; 0 means hardware concurrency.
  unsigned threads = 0;

  void validate() const {
    if (max_outer_iters <= 0 || !(tol_gap > 0) || !(tol_weights > 0) || n_probe_starts < 0 ||
        lagrange_bisection_iters <= 0 || max_inner_iters <= 0 || max_probe_iters <= 0)
      throw InvalidArgument("solver options must be positive");
  }
};

struct TraceEntry {
  int iteration = 0;
  double chi = 0.0;
  double gap = 0.0;
  std::optional<double> mean_energy;
  std::size_t support_size = 0;
};

struct CapacityReport {
  double chi_value = 0.0;
  Ensemble ensemble;
  /// Best-effort lower bound on the maximal-distance violation (upper bound
  /// on C - chi only up to the reach of the pure-state probe).
  double certificate_gap = 0.0;
  bool constraint_active = false;
  double lagrange_multiplier = 0.0;
  std::optional<double> mean_energy;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceEntry> trace;
};

class MaxItersExceeded : public Error {
 public:
  MaxItersExceeded(const std::string& what, CapacityReport best)
      : Error("MaxItersExceeded", ErrorClass::numerical, what), best_(std::move(best)) {}

  [[nodiscard]] const CapacityReport& best_report() const noexcept { return best_; }

 private:
  CapacityReport best_;
};

namespace detail::cap {

inline double bits_to_nats(double x) { return x * std::numbers::ln2; }
inline double nats_to_bits(double x) { return x / std::numbers::ln2; }

inline constexpr double log_floor = 1e-300;
inline constexpr double prune_weight = 1e-12;

/// log of an output average, with eigenvalues outside its numerical support
/// sent to log(1e-300): a large finite stand-in for -infinity.
inline Matrix support_log(const Matrix& sigma, double tol_rank) {
  const linalg::Spectrum s = linalg::eigh(sigma);
  const double cut = tol_rank * s.max();
  return linalg::spectral_apply(s, [cut](double x) { return x > cut ? std::log(x) : std::log(log_floor); });
}

inline double entropy_nats(const Matrix& a, double tol_rank) {
  return detail::entropy_nats(linalg::eigvalsh(a), tol_rank);
}

/// Candidate support with cached channel outputs.
struct Support {
  std::vector<DensityMatrix> states;
  std::vector<Matrix> outputs;
  std::vector<double> out_entropy;  // nats
  std::vector<double> energy;       // empty when unconstrained

  void add(const Channel& ch, DensityMatrix rho, const HConstraint* h, double tol_rank) {
    outputs.push_back(apply_operator(ch, rho.matrix()));
    out_entropy.push_back(entropy_nats(outputs.back(), tol_rank));
    if (h) energy.push_back(mean_energy(rho, *h));
    states.push_back(std::move(rho));
  }

  void erase(std::size_t i) {
    states.erase(states.begin() + static_cast<std::ptrdiff_t>(i));
    outputs.erase(outputs.begin() + static_cast<std::ptrdiff_t>(i));
    out_entropy.erase(out_entropy.begin() + static_cast<std::ptrdiff_t>(i));
    if (!energy.empty()) energy.erase(energy.begin() + static_cast<std::ptrdiff_t>(i));
  }

  [[nodiscard]] std::size_t size() const { return states.size(); }
};

struct Evaluation {
  Matrix average;  // output average
  RealVector divergence;  // D(Phi(rho_i) || average), nats
  double chi = 0.0;       // nats
};

inline Evaluation evaluate(const Support& sup, const std::vector<double>& w, double tol_rank) {
  const Eigen::Index d = sup.outputs.front().rows();
  Evaluation ev;
  ev.average = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < w.size(); ++i) ev.average.noalias() += w[i] * sup.outputs[i];
  const Matrix log_avg = support_log(ev.average, tol_rank);
  ev.divergence.resize(static_cast<Eigen::Index>(w.size()));
  Accumulator avg_entropy;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ev.divergence(static_cast<Eigen::Index>(i)) =
        -sup.out_entropy[i] - linalg::trace_product(sup.outputs[i], log_avg);
    avg_entropy.add(w[i] * sup.out_entropy[i]);
  }
  ev.chi = entropy_nats(ev.average, tol_rank) - avg_entropy.value();
  return ev;
}

inline double weighted_energy(const Support& sup, const std::vector<double>& w) {
  Accumulator e;
  for (std::size_t i = 0; i < w.size(); ++i) e.add(w[i] * sup.energy[i]);
  return e.value();
}

inline void normalize(std::vector<double>& w) {
  double t = 0.0;
  for (double x : w) t += x;
  for (double& x : w) x /= t;
}

inline std::vector<double> floored(std::vector<double> w, double floor = 1e-15) {
  for (double& x : w) x = std::max(x, floor);
  normalize(w);
  return w;
}

/// Multiplicative (Blahut-Arimoto type) ascent of chi - s * energy at fixed
/// multiplier s. Returns the final KKT residual in nats.
inline double blahut_arimoto(const Support& sup, std::vector<double>& w, double s, double tol, int max_iters,
                             double tol_rank) {
  const auto n = static_cast<Eigen::Index>(w.size());
  double kkt = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    const Evaluation ev = evaluate(sup, w, tol_rank);
    RealVector a = ev.divergence;
    if (s != 0.0)
      for (Eigen::Index i = 0; i < n; ++i) a(i) -= s * sup.energy[static_cast<std::size_t>(i)];
    const double top = a.maxCoeff();
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean += w[static_cast<std::size_t>(i)] * a(i);
    kkt = top - mean;
    if (kkt <= tol) break;
    for (Eigen::Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] *= std::exp(a(i) - top);
    normalize(w);
  }
  return kkt;
}

inline double penalized_objective(const Support& sup, const std::vector<double>& w, double s, double tol_rank) {
  const double c = evaluate(sup, w, tol_rank).chi;
  return s != 0.0 ? c - s * weighted_energy(sup, w) : c;
}

/// Projected Newton ascent of chi - s * energy on the simplex. Used to polish
/// Blahut-Arimoto iterates, whose convergence is sublinear when outputs of
/// support atoms are nearly dependent. Returns the final KKT residual in nats.
inline double newton_polish(const Support& sup, std::vector<double>& w, double s, double tol, int max_iters,
                            double tol_rank) {
  const std::size_t n = w.size();
  double kkt = std::numeric_limits<double>::infinity();
  double f = penalized_objective(sup, w, s, tol_rank);
  for (int it = 0; it < max_iters; ++it) {
    const Evaluation ev = evaluate(sup, w, tol_rank);
    RealVector a = ev.divergence;
    if (s != 0.0)
      for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>(i)) -= s * sup.energy[i];
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += w[i] * a(static_cast<Eigen::Index>(i));
    kkt = a.maxCoeff() - mean;
    if (kkt <= tol) break;

    // Free atoms: positive weight, or zero weight with an ascent direction.
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
      if (w[i] > 0.0 || a(static_cast<Eigen::Index>(i)) > mean) free.push_back(i);
    const auto m = static_cast<Eigen::Index>(free.size());

    // Hessian of S(sum w_i sigma_i) through the divided differences of log.
    const linalg::Spectrum sp = linalg::eigh(ev.average);
    const double cut = tol_rank * sp.max();
    const Eigen::Index d = sp.size();
    RealMatrix lq(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = 0; l < d; ++l) {
        const double pk = sp.values(k), pl = sp.values(l);
        if (pk <= cut || pl <= cut) lq(k, l) = 0.0;
        else if (std::abs(pk - pl) <= 1e-12 * std::max(pk, pl)) lq(k, l) = 2.0 / (pk + pl);
        else lq(k, l) = (std::log(pk) - std::log(pl)) / (pk - pl);
      }
    std::vector<Matrix> b(free.size());
    for (Eigen::Index i = 0; i < m; ++i)
      b[static_cast<std::size_t>(i)] = sp.vectors.adjoint() * sup.outputs[free[static_cast<std::size_t>(i)]] * sp.vectors;
    RealMatrix kkt_sys = RealMatrix::Zero(m + 1, m + 1);
    RealVector rhs = RealVector::Zero(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Matrix li = lq.cast<std::complex<double>>().cwiseProduct(b[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double hij = -(b[static_cast<std::size_t>(j)].transpose().cwiseProduct(li)).sum().real();
        kkt_sys(i, j) = hij;
        kkt_sys(j, i) = hij;
      }
      rhs(i) = -a(static_cast<Eigen::Index>(free[static_cast<std::size_t>(i)]));
      kkt_sys(i, m) = 1.0;
      kkt_sys(m, i) = 1.0;
    }
    const double scale = std::max(1.0, kkt_sys.topLeftCorner(m, m).diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) kkt_sys(i, i) -= 1e-12 * scale;
    const RealVector sol = kkt_sys.completeOrthogonalDecomposition().solve(rhs);

    std::vector<double> step(n, 0.0);
    for (Eigen::Index i = 0; i < m; ++i) step[free[static_cast<std::size_t>(i)]] = sol(i);
    bool improved = false;
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      std::vector<double> trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = std::max(0.0, w[i] + t * step[i]);
      normalize(trial);
      const double ft = penalized_objective(sup, trial, s, tol_rank);
      if (ft > f) {
        improved = true;
        w = std::move(trial);
        f = ft;
        break;
      }
    }
    if (!improved) break;
  }
  return kkt;
}

/// Blahut-Arimoto warm start followed by Newton polishing.
inline double ascend_weights(const Support& sup, std::vector<double>& w, double s, double tol, int max_iters,
                             double tol_rank) {
  const double kkt = blahut_arimoto(sup, w, s, tol, std::min(max_iters, 200), tol_rank);
  if (kkt <= tol) return kkt;
  return newton_polish(sup, w, s, tol, 100, tol_rank);
}

struct WeightResult {
  std::vector<double> weights;
  double multiplier = 0.0;
  bool active = false;
  double kkt = 0.0;  // nats
};

/// Mixes toward the lowest-energy atom until the weighted energy is <= h.
inline void restore_feasibility(const Support& sup, std::vector<double>& w, double h) {
  const double e = weighted_energy(sup, w);
  if (e <= h) return;
  const auto low = static_cast<std::size_t>(std::min_element(sup.energy.begin(), sup.energy.end()) - sup.energy.begin());
  const double e_low = sup.energy[low];
  double t = (e - h) / (e - e_low);
  for (int guard = 0; guard < 8; ++guard) {
    std::vector<double> mixed = w;
    for (double& x : mixed) x *= 1.0 - t;
    mixed[low] += t;
    if (weighted_energy(sup, mixed) <= h) {
      w = std::move(mixed);
      return;
    }
    t = std::min(1.0, t + 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + t));
  }
  std::fill(w.begin(), w.end(), 0.0);
  w[low] = 1.0;
}

/// Maximizes chi over weights on a fixed support under the optional energy
/// bound, by regula falsi on the multiplier of the energy term.
inline WeightResult optimize(const Support& sup, std::vector<double> w0, const HConstraint* h,
                             const SolverOptions& opts, double tol, double s_hint, double tol_rank) {
  WeightResult r;
  const int iters = opts.max_inner_iters;
  r.weights = floored(std::move(w0));
  if (!h) {
    r.kkt = ascend_weights(sup, r.weights, 0.0, tol, iters, tol_rank);
    return r;
  }
  const double bound = h->bound();
  if (*std::min_element(sup.energy.begin(), sup.energy.end()) > bound + energy_ball_slack)
    throw Infeasible("no support state satisfies the energy bound");

  std::vector<double> w_lo = r.weights;
  r.kkt = ascend_weights(sup, w_lo, 0.0, tol, iters, tol_rank);
  double e_lo = weighted_energy(sup, w_lo);
  if (e_lo <= bound) {
    r.weights = std::move(w_lo);
    return r;
  }

  double s_lo = 0.0;
  double s_hi = std::max(s_hint, 1e-3);
  std::vector<double> w_hi;
  double e_hi = 0.0;
  double kkt_hi = 0.0;
  for (;;) {
    w_hi = floored(w_lo);
    kkt_hi = ascend_weights(sup, w_hi, s_hi, tol, iters, tol_rank);
    e_hi = weighted_energy(sup, w_hi);
    if (e_hi <= bound) break;
    s_lo = s_hi;
    w_lo = w_hi;
    e_lo = e_hi;
    s_hi *= 4.0;
    if (s_hi > 1e12) {
      restore_feasibility(sup, w_hi, bound);
      r.weights = std::move(w_hi);
      r.multiplier = s_hi;
      r.active = true;
      r.kkt = kkt_hi;
      return r;
    }
  }

  // Illinois regula falsi on E(s) - h, with bisection as the fallback.
  int side = 0;
  double f_lo = e_lo - bound, f_hi = e_hi - bound;
  for (int k = 0; k < opts.lagrange_bisection_iters && s_hi - s_lo > 1e-13 * s_hi; ++k) {
    double mid = (s_lo * f_hi - s_hi * f_lo) / (f_hi - f_lo);
    if (!(mid > s_lo && mid < s_hi)) mid = 0.5 * (s_lo + s_hi);
    std::vector<double> w = floored(w_hi);
    const double kkt = ascend_weights(sup, w, mid, tol, iters, tol_rank);
    const double e = weighted_energy(sup, w);
    if (e > bound) {
      s_lo = mid;
      w_lo = std::move(w);
      e_lo = e;
      f_lo = e - bound;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      s_hi = mid;
      w_hi = std::move(w);
      e_hi = e;
      f_hi = e - bound;
      kkt_hi = kkt;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (bound - e_hi <= 1e-14 * std::max(1.0, bound)) break;
  }

  // Land exactly on the bound between the two bracketing solutions.
  std::vector<double> w = w_hi;
  if (e_lo > e_hi) {
    const double t = std::clamp((bound - e_hi) / (e_lo - e_hi), 0.0, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = t * w_lo[i] + (1.0 - t) * w_hi[i];
  }
  restore_feasibility(sup, w, bound);
  r.weights = std::move(w);
  r.multiplier = s_hi;
  r.active = true;
  r.kkt = kkt_hi;
  return r;
}

/// Drops atoms below `threshold`, renormalizes and restores feasibility.
inline void prune(Support& sup, std::vector<double>& w, const HConstraint* h, double threshold) {
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] < threshold && w.size() > 1) {
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
      sup.erase(i);
    }
  normalize(w);
  if (h) restore_feasibility(sup, w, h->bound());
}

/// Shrinks the support to at most `cap` atoms without moving the barycenter
/// and without lowering chi: repeatedly steps along a null direction of the
/// barycenter map until one weight hits zero.
inline void caratheodory_reduce(Support& sup, std::vector<double>& w, std::size_t cap) {
  while (sup.size() > cap) {
    const auto n = static_cast<Eigen::Index>(sup.size());
    const Eigen::Index d = sup.states.front().dim();
    RealMatrix m(d * d + 1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Matrix& r = sup.states[static_cast<std::size_t>(i)].matrix();
      Eigen::Index row = 0;
      for (Eigen::Index k = 0; k < d; ++k) m(row++, i) = r(k, k).real();
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = k + 1; l < d; ++l) {
          m(row++, i) = r(k, l).real();
          m(row++, i) = r(k, l).imag();
        }
      m(row, i) = 1.0;
    }
    const Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeFullV);
    RealVector v = svd.matrixV().col(n - 1);
    // chi = H(avg) - sum w S; the first term is fixed along v.
    double slope = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) slope -= v(i) * sup.out_entropy[static_cast<std::size_t>(i)];
    if (slope < 0.0) v = -v;
    std::size_t hit = 0;
    double t = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
      if (v(i) < 0.0 && w[static_cast<std::size_t>(i)] / -v(i) < t) {
        t = w[static_cast<std::size_t>(i)] / -v(i);
        hit = static_cast<std::size_t>(i);
      }
    if (!std::isfinite(t)) break;
    for (Eigen::Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::max(0.0, w[static_cast<std::size_t>(i)] + t * v(i));
    w[hit] = 0.0;
    for (std::size_t i = w.size(); i-- > 0;)
      if (w[i] <= 0.0) {
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
        sup.erase(i);
      }
    normalize(w);
  }
}

struct ProbeResult {
  Vector psi;
  double value = -std::numeric_limits<double>::infinity();  // D - lambda * energy, nats
  double energy = 0.0;
};

/// Riemannian gradient ascent on the unit sphere of
/// f(psi) = Tr A log A - Tr A L - lambda <psi|H|psi>, A = Phi(|psi><psi|).
class ProbeObjective {
 public:
  ProbeObjective(const Channel& ch, const Matrix& log_avg, const HConstraint* h, double lambda, double tol_rank)
      : ch_(ch), log_avg_(log_avg), h_(h), lambda_(lambda), tol_rank_(tol_rank) {}

  [[nodiscard]] double energy(const Vector& psi) const { return h_ ? mean_energy(psi, *h_) : 0.0; }

  [[nodiscard]] double value(const Vector& psi) const {
    const Matrix a = output(psi);
    return -entropy_nats(a, tol_rank_) - linalg::trace_product(a, log_avg_) - lambda_ * energy(psi);
  }

  /// Tangent gradient M psi - <psi|M|psi> psi.
  [[nodiscard]] Vector gradient(const Vector& psi) const {
    const Matrix a = output(psi);
    const linalg::Spectrum s = linalg::eigh(a);
    const Matrix log_a = linalg::log_psd(s, tol_rank_ * s.max());
    const Matrix m_out = log_a - log_avg_;
    Vector mpsi = Vector::Zero(psi.size());
    for (const Matrix& k : ch_.kraus()) mpsi.noalias() += k.adjoint() * (m_out * (k * psi));
    if (h_ && lambda_ != 0.0) mpsi -= lambda_ * (h_->energy_vector().cast<cplx>().cwiseProduct(psi));
    const cplx proj = psi.dot(mpsi);
    return mpsi - proj * psi;
  }

  [[nodiscard]] ProbeResult ascend(Vector psi, int max_iters) const {
    psi.normalize();
    double f = value(psi);
    double t = 1.0;
    for (int it = 0; it < max_iters; ++it) {
      const Vector g = gradient(psi);
      const double gg = g.squaredNorm();
      if (gg < 1e-24) break;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        Vector cand = psi + t * g;
        cand.normalize();
        const double fc = value(cand);
        if (fc >= f + 1e-4 * t * gg) {
          moved = fc > f;
          psi = std::move(cand);
          f = fc;
          t = std::min(2.0 * t, 1e6);
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    return {psi, f, energy(psi)};
  }

 private:
  [[nodiscard]] Matrix output(const Vector& psi) const { return apply_operator(ch_, psi * psi.adjoint()); }

  const Channel& ch_;
  const Matrix& log_avg_;
  const HConstraint* h_;
  double lambda_;
  double tol_rank_;
};

inline bool same_ray(const Vector& a, const Vector& b, double tol = 1e-10) {
  return 1.0 - std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm()) < tol;
}

/// Multi-start probe. Starts are the eigenvectors of the linear part
/// -Phi*(L) - lambda H plus `n_probe_starts` seeded random vectors; results
/// come back sorted by value with duplicate rays removed.
inline std::vector<ProbeResult> probe(const Channel& ch, const Matrix& average, const HConstraint* h, double lambda,
                                      const SolverOptions& opts, std::uint64_t salt, double tol_rank) {
  const Matrix log_avg = support_log(average, tol_rank);
  Matrix lin = -apply_adjoint(ch, log_avg);
  if (h && lambda != 0.0) lin -= lambda * h->matrix();
  const linalg::Spectrum s = linalg::eigh(lin);

  std::vector<Vector> starts;
  for (Eigen::Index j = s.size() - 1; j >= 0; --j) starts.push_back(s.vectors.col(j));
  std::seed_seq seq{opts.seed, salt};
  random::Rng rng(seq);
  for (int k = 0; k < opts.n_probe_starts; ++k) starts.push_back(random::pure_vector(ch.dim_in(), rng));

  const ProbeObjective obj(ch, log_avg, h, lambda, tol_rank);
  std::vector<ProbeResult> found = parallel_map(starts.size(), opts.threads,
                                                [&](std::size_t i) { return obj.ascend(starts[i], opts.max_probe_iters); });
  std::stable_sort(found.begin(), found.end(), [](const ProbeResult& a, const ProbeResult& b) { return a.value > b.value; });
  std::vector<ProbeResult> distinct;
  for (auto& r : found) {
    const bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const ProbeResult& q) { return same_ray(q.psi, r.psi, 1e-8); });
    if (!dup) distinct.push_back(std::move(r));
  }
  return distinct;
}

inline Ensemble to_ensemble(const Support& sup, const std::vector<double>& w) {
  return Ensemble(w, sup.states, 1e-9);
}

inline void check_inputs(const Channel& ch, const HConstraint* h) {
  if (!ch.is_validated()) validate_channel(ch);
  if (h) {
    if (h->dim() != ch.dim_in()) throw DimensionMismatch("constraint dimension differs from channel input");
    if (h->ground_energy() > h->bound() + energy_ball_slack)
      throw Infeasible("energy bound is below the ground-state energy");
  }
}

}  // namespace detail::cap

struct WeightSolution {
  Ensemble ensemble;
  double kkt_residual = 0.0;  // bits
  double lagrange_multiplier = 0.0;  // per unit energy, nats
  bool constraint_active = false;
};

/// Maximizes chi over weights on the fixed support `states`, subject to the
/// optional energy bound. Atoms below weight 1e-12 are pruned.
inline WeightSolution optimize_weights_detailed(const Channel& channel, const std::vector<DensityMatrix>& states,
                                                const std::optional<HConstraint>& constraint,
                                                const SolverOptions& opts = {},
                                                const NumericConfig& cfg = default_config()) {
  using namespace detail::cap;
  opts.validate();
  if (states.empty()) throw EmptyEnsemble("optimize_weights: empty candidate support");
  const HConstraint* h = constraint ? &*constraint : nullptr;
  check_inputs(channel, h);
  Support sup;
  for (const auto& s : states) {
    if (s.dim() != channel.dim_in()) throw DimensionMismatch("optimize_weights: state dimension differs from channel input");
    sup.add(channel, s, h, cfg.tol_rank);
  }
  std::vector<double> w(states.size(), 1.0 / static_cast<double>(states.size()));
  WeightResult r = optimize(sup, std::move(w), h, opts, bits_to_nats(opts.tol_weights), 0.0, cfg.tol_rank);
  prune(sup, r.weights, h, prune_weight);
  return {to_ensemble(sup, r.weights), nats_to_bits(r.kkt), r.multiplier, r.active};
}

inline Ensemble optimize_weights(const Channel& channel, const std::vector<DensityMatrix>& states,
                                 const std::optional<HConstraint>& constraint, const SolverOptions& opts = {},
                                 const NumericConfig& cfg = default_config()) {
  return optimize_weights_detailed(channel, states, constraint, opts, cfg).ensemble;
}

struct Certificate {
  /// max over feasible probe measures of the average output divergence minus
  /// chi, in bits; +inf when a probe output leaves the support of the average.
  ExtReal gap;
  /// The probe measure attaining `gap` (one or two pure atoms).
  Ensemble witness;
  bool optimal = false;
};

/// Checks the maximal-distance property of `ensemble`. The probe is a
/// multi-start local search, so the gap is a best-effort lower bound on the
/// true violation.
inline Certificate certify_optimality(const Channel& channel, const Ensemble& ensemble,
                                      const std::optional<HConstraint>& constraint, const SolverOptions& opts = {},
                                      const NumericConfig& cfg = default_config()) {
  using namespace detail::cap;
  opts.validate();
  const HConstraint* h = constraint ? &*constraint : nullptr;
  check_inputs(channel, h);
  if (ensemble.dim() != channel.dim_in()) throw DimensionMismatch("certify_optimality: ensemble dimension differs from channel input");
  const DensityMatrix avg_in = barycenter(ensemble);
  if (h && !in_energy_ball(avg_in, *h)) throw Infeasible("certify_optimality: barycenter violates the energy bound");

  const double chi_bits = chi(channel, ensemble, cfg).value();
  const DensityMatrix avg_out = apply(channel, avg_in);

  std::vector<double> lambdas{0.0};
  if (h)
    for (int k = -3; k <= 3; ++k) lambdas.push_back(std::pow(10.0, k));

  struct Candidate {
    Vector psi;
    ExtReal divergence;
    double energy;
  };
  std::vector<Candidate> cands;
  const auto consider = [&](const Vector& psi) {
    for (const auto& c : cands)
      if (same_ray(c.psi, psi, 1e-8)) return;
    const DensityMatrix rho = DensityMatrix::pure(psi);
    cands.push_back({psi, relative_entropy(apply(channel, rho), avg_out, cfg), h ? mean_energy(psi, *h) : 0.0});
  };
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const auto found = probe(channel, avg_out.matrix(), h, lambdas[k], opts, 0x5eed0000 + k, cfg.tol_rank);
    for (std::size_t j = 0; j < found.size() && j < 3; ++j) consider(found[j].psi);
  }
  if (h) consider(Vector::Unit(channel.dim_in(), 0));

  ExtReal best(-std::numeric_limits<double>::infinity());
  Ensemble witness;
  const auto offer = [&](ExtReal value, Ensemble mu) {
    if (value > best) {
      best = value;
      witness = std::move(mu);
    }
  };
  for (const auto& c : cands) {
    if (!h || c.energy <= h->bound()) offer(c.divergence, Ensemble::single(DensityMatrix::pure(c.psi)));
  }
  if (h) {
    // Two-point probes: an infeasible state mixed with a feasible one so the
    // mean energy sits exactly on the bound. The value is linear in the
    // mixing weight, so the endpoint of the feasible range is optimal.
    for (const auto& a : cands) {
      if (a.energy <= h->bound()) continue;
      for (const auto& b : cands) {
        if (b.energy > h->bound()) continue;
        const double t = (h->bound() - b.energy) / (a.energy - b.energy);
        if (!(t > 0.0)) continue;
        const ExtReal value = t * a.divergence + (1.0 - t) * b.divergence;
        offer(value, Ensemble({t, 1.0 - t}, {DensityMatrix::pure(a.psi), DensityMatrix::pure(b.psi)}, 1e-9));
      }
    }
  }

  Certificate out;
  out.gap = best.is_infinite() ? ExtReal::infinity() : ExtReal(std::max(0.0, best.value() - chi_bits));
  out.witness = std::move(witness);
  out.optimal = out.gap.is_finite() && out.gap.value() <= opts.tol_gap;
  return out;
}

/// Constrained chi-capacity of `channel` over ensembles whose barycenter lies
/// in the energy ball (or over all ensembles when `constraint` is empty).
inline CapacityReport solve_capacity(const Channel& channel, const std::optional<HConstraint>& constraint,
                                     const SolverOptions& opts = {}, const NumericConfig& cfg = default_config()) {
  using namespace detail::cap;
  opts.validate();
  const HConstraint* h = constraint ? &*constraint : nullptr;
  check_inputs(channel, h);
  const Eigen::Index d = channel.dim_in();
  const double tol_rank = cfg.tol_rank;

  Support sup;
  std::vector<Vector> rays;
  const auto add_ray = [&](const Vector& psi) {
    for (const auto& r : rays)
      if (same_ray(r, psi)) return false;
    rays.push_back(psi.normalized());
    sup.add(channel, DensityMatrix::pure(rays.back()), h, tol_rank);
    return true;
  };
  for (Eigen::Index k = 0; k < d; ++k) add_ray(Vector::Unit(d, k));
  {
    const Matrix start_avg = apply_operator(channel, Matrix::Identity(d, d) / static_cast<double>(d));
    const linalg::Spectrum s = linalg::eigh(-apply_adjoint(channel, support_log(start_avg, tol_rank)));
    for (Eigen::Index j = s.size() - 1; j >= 0; --j) add_ray(s.vectors.col(j));
  }

  std::vector<double> w(sup.size(), 1.0 / static_cast<double>(sup.size()));
  double weight_floor = bits_to_nats(opts.tol_weights);
  double inner_tol = std::max(weight_floor, 1e-4);
  double multiplier = 0.0;
  const std::size_t support_cap = static_cast<std::size_t>(std::max<Eigen::Index>(d * d, 2));

  CapacityReport best;
  best.chi_value = -1.0;
  std::vector<TraceEntry> trace;
  double trace_chi = -std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opts.max_outer_iters; ++iter) {
    WeightResult wr = optimize(sup, w, h, opts, inner_tol, multiplier, tol_rank);
    w = std::move(wr.weights);
    multiplier = wr.multiplier;
    prune(sup, w, h, prune_weight);
    if (sup.size() > support_cap) {
      caratheodory_reduce(sup, w, support_cap);
      if (h) restore_feasibility(sup, w, h->bound());
    }
    rays.clear();
    for (const auto& s : sup.states) rays.push_back(linalg::eigh(s.matrix()).vectors.col(s.dim() - 1));

    const Evaluation ev = evaluate(sup, w, tol_rank);
    const double lambda = wr.active ? multiplier : 0.0;
    const auto probes = probe(channel, ev.average, h, lambda, opts, static_cast<std::uint64_t>(iter), tol_rank);
    // Lagrangian dual bound: every feasible measure mu satisfies
    // int D dmu - chi <= max_psi [D - lambda e] + lambda h - chi.
    const double dual = probes.front().value + (h ? lambda * h->bound() : 0.0) - ev.chi;
    const double gap_bits = nats_to_bits(std::max(0.0, dual));
    inner_tol = std::max(weight_floor, std::min(inner_tol, 0.01 * dual));
    const double chi_bits = nats_to_bits(ev.chi);
    const std::optional<double> energy = h ? std::optional<double>(weighted_energy(sup, w)) : std::nullopt;

    trace_chi = std::max(trace_chi, chi_bits);
    trace.push_back({iter, trace_chi, gap_bits, energy, sup.size()});

    const bool converged = gap_bits <= opts.tol_gap;
    if (converged || chi_bits > best.chi_value) {
      best.ensemble = to_ensemble(sup, w);
      best.chi_value = chi_bits;
      best.certificate_gap = gap_bits;
      best.constraint_active = wr.active;
      best.lagrange_multiplier = lambda;
      best.mean_energy = energy;
      best.iterations = iter;
    }
    if (converged) {
      best.converged = true;
      break;
    }

    // Exchange step: add the best new probe states.
    std::size_t added = 0;
    const std::size_t before = sup.size();
    for (const auto& p : probes) {
      if (added >= 3) break;
      if (p.value <= ev.chi - (h ? lambda * h->bound() : 0.0)) break;
      if (add_ray(p.psi)) ++added;
    }
    if (added == 0) {
      // The probe only rediscovered support atoms: the weights are not yet
      // accurate enough to expose the gap.
      weight_floor = std::max(std::min(weight_floor, inner_tol) * 0.1, 1e-16);
      inner_tol = weight_floor;
      continue;
    }
    for (double& x : w) x *= 0.95;
    for (std::size_t i = before; i < sup.size(); ++i) w.push_back(0.05 / static_cast<double>(added));
    normalize(w);
  }
  best.trace = std::move(trace);

  // Clean report: drop numerically invisible atoms.
  {
    Support fin;
    for (const auto& s : best.ensemble.states()) fin.add(channel, s, h, tol_rank);
    std::vector<double> fw = best.ensemble.weights();
    prune(fin, fw, h, 1e-10);
    best.ensemble = to_ensemble(fin, fw);
    if (h) best.mean_energy = mean_energy(barycenter(best.ensemble), *h);
  }
  best.chi_value = chi(channel, best.ensemble, cfg).value();

  if (!best.converged)
    throw MaxItersExceeded("solve_capacity: certificate gap did not reach tol_gap within max_outer_iters", best);
  return best;
}

/// chi of a fixed average state: the supremum of chi over pure-state
/// ensembles with barycenter rho0, found by minimizing the average output
/// entropy over decompositions rho0 = sum_i |phi_i><phi_i|.
///
/// Decompositions are parametrized as phi_i = A u_i with A = E sqrt(Lambda)
/// from the eigendecomposition of rho0 and {u_i} the rows of an m x r
/// isometry (m = r^2); the search is Riemannian gradient descent on that
/// Stiefel manifold from the spectral decomposition and random starts.
/// certificate_gap is the Riemannian gradient norm at the returned point.
inline CapacityReport chi_of_state(const Channel& channel, const DensityMatrix& rho0, const SolverOptions& opts = {},
                                   const NumericConfig& cfg = default_config()) {
  using namespace detail::cap;
  opts.validate();
  if (!channel.is_validated()) validate_channel(channel);
  if (rho0.dim() != channel.dim_in()) throw DimensionMismatch("chi_of_state: state dimension differs from channel input");
  {
    const double t = rho0.trace();
    if (std::abs(t - 1.0) > cfg.tol_trace) throw NonState("chi_of_state: trace is " + std::to_string(t));
    if (linalg::eigvalsh(rho0.matrix()).minCoeff() < -cfg.tol_psd) throw NonState("chi_of_state: state is not positive");
  }
  const double tol_rank = cfg.tol_rank;

  const linalg::Spectrum sp = linalg::eigh(rho0.matrix());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = sp.size() - 1; j >= 0; --j)
    if (sp.values(j) > tol_rank * sp.max()) keep.push_back(j);
  const auto r = static_cast<Eigen::Index>(keep.size());
  Matrix a(rho0.dim(), r);
  for (Eigen::Index j = 0; j < r; ++j) a.col(j) = std::sqrt(sp.values(keep[static_cast<std::size_t>(j)])) * sp.vectors.col(keep[static_cast<std::size_t>(j)]);
  const Eigen::Index m = r * r;

  // tr(B) * S(B / tr B); entropy_nats already normalizes inside the log.
  const auto unnormalized_entropy = [&](const Matrix& b) { return detail::entropy_nats(linalg::eigvalsh(b), tol_rank); };
  const auto objective = [&](const Matrix& v) {
    detail::Accumulator f;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector phi = a * v.row(i).adjoint();
      if (phi.squaredNorm() == 0.0) continue;
      f.add(unnormalized_entropy(apply_operator(channel, phi * phi.adjoint())));
    }
    return f.value();
  };
  const auto riemannian_gradient = [&](const Matrix& v) {
    Matrix g(m, r);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector u = v.row(i).adjoint();
      const Vector phi = a * u;
      if (phi.squaredNorm() == 0.0) {
        g.row(i).setZero();
        continue;
      }
      const linalg::Spectrum s = linalg::eigh(apply_operator(channel, phi * phi.adjoint()));
      const double tr = s.values.cwiseMax(0.0).sum();
      Matrix n = -linalg::log_psd(s, tol_rank * s.max());
      n.diagonal().array() += std::log(tr);
      const Vector q = a.adjoint() * apply_adjoint(channel, n) * phi;
      g.row(i) = 2.0 * q.adjoint();
    }
    const Matrix vg = v.adjoint() * g;
    return Matrix(g - v * (0.5 * (vg + vg.adjoint())));
  };

  std::vector<Matrix> starts;
  starts.push_back(Matrix::Identity(m, r));
  {
    std::seed_seq seq{opts.seed, std::uint64_t{0xc415}};
    random::Rng rng(seq);
    for (int k = 0; k < opts.n_probe_starts; ++k) starts.push_back(random::isometry(m, r, rng));
  }
  const int max_iters = std::min(opts.max_inner_iters, 5000);

  struct Run {
    Matrix v;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
  };
  const auto descend = [&](Matrix v) {
    double f = objective(v);
    double t = 1.0;
    Run run;
    int it = 0;
    Matrix g = riemannian_gradient(v);
    for (; it < max_iters; ++it) {
      const double gg = g.squaredNorm();
      if (gg < 1e-24) break;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const Matrix cand = linalg::orthonormal_columns(v - t * g);
        const double fc = objective(cand);
        if (fc <= f - 1e-4 * t * gg) {
          moved = fc < f;
          v = cand;
          f = fc;
          t = std::min(2.0 * t, 1e6);
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      g = riemannian_gradient(v);
    }
    run.v = std::move(v);
    run.f = f;
    run.grad_norm = g.norm();
    run.iterations = it;
    return run;
  };
  const std::vector<Run> runs = detail::parallel_map(starts.size(), opts.threads, [&](std::size_t i) { return descend(starts[i]); });
  const Run* bestrun = &runs.front();
  for (const Run& run : runs)
    if (run.f < bestrun->f - 1e-14) bestrun = &run;

  std::vector<double> w;
  std::vector<DensityMatrix> states;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector phi = a * bestrun->v.row(i).adjoint();
    const double wi = phi.squaredNorm();
    if (wi < 1e-14) continue;
    w.push_back(wi);
    states.push_back(DensityMatrix::pure(phi));
  }
  normalize(w);

  CapacityReport rep;
  rep.ensemble = Ensemble(std::move(w), std::move(states), 1e-9);
  rep.chi_value = chi(channel, rep.ensemble, cfg).value();
  rep.certificate_gap = nats_to_bits(bestrun->grad_norm);
  rep.converged = true;
  rep.iterations = bestrun->iterations;
  rep.trace.push_back({bestrun->iterations, rep.chi_value, rep.certificate_gap, std::nullopt, rep.ensemble.size()});
  return rep;
}

}  // namespace chicap

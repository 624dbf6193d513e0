#pragma once

// Finite-support ensembles (probability measures on state space) and the
// functionals defined on them: barycenter, chi, truncated chi, the
// Donald-identity residual, purification and metric discretization.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/errors.hpp"
#include "chicap/linalg.hpp"

namespace chicap {

namespace detail {

inline void validate_atoms(const std::vector<double>& weights, const std::vector<DensityMatrix>& states, double tol) {
  if (weights.empty() || states.empty()) throw EmptyEnsemble("ensemble has no atoms");
  if (weights.size() != states.size()) throw InvalidEnsemble("weights and states have different lengths");
  Accumulator total;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidEnsemble("ensemble weights must be positive");
    total.add(w);
  }
  if (std::abs(total.value() - 1.0) > tol)
    throw InvalidEnsemble("ensemble weights sum to " + std::to_string(total.value()));
  const Eigen::Index d = states.front().dim();
  for (const auto& s : states)
    if (s.dim() != d) throw DimensionMismatch("ensemble states have different dimensions");
}

}  // namespace detail

/// Weighted list of states: {w_i, rho_i} with w_i > 0 and sum w_i = 1.
class Ensemble {
 public:
  Ensemble() = default;

  Ensemble(std::vector<double> weights, std::vector<DensityMatrix> states, double tol = 1e-12)
      : weights_(std::move(weights)), states_(std::move(states)) {
    detail::validate_atoms(weights_, states_, tol);
  }

  static Ensemble single(DensityMatrix rho) { return Ensemble({1.0}, {std::move(rho)}); }

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] Eigen::Index dim() const { return states_.front().dim(); }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<DensityMatrix>& states() const noexcept { return states_; }

 private:
  std::vector<double> weights_;
  std::vector<DensityMatrix> states_;
};

/// Many-atom stand-in for a general Borel measure on state space; the input
/// of `discretize`.
class SampledMeasure {
 public:
  SampledMeasure() = default;

  SampledMeasure(std::vector<double> weights, std::vector<DensityMatrix> states, double tol = 1e-12)
      : weights_(std::move(weights)), states_(std::move(states)) {
    detail::validate_atoms(weights_, states_, tol);
  }

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] Eigen::Index dim() const { return states_.front().dim(); }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<DensityMatrix>& states() const noexcept { return states_; }

 private:
  std::vector<double> weights_;
  std::vector<DensityMatrix> states_;
};

template <class M>
concept AtomicMeasure = requires(const M& m) {
  { m.weights() } -> std::convertible_to<const std::vector<double>&>;
  { m.states() } -> std::convertible_to<const std::vector<DensityMatrix>&>;
};

/// sum_i w_i rho_i.
template <AtomicMeasure M>
DensityMatrix barycenter(const M& measure) {
  if (measure.weights().empty()) throw EmptyEnsemble("barycenter of an empty ensemble");
  const auto& w = measure.weights();
  const auto& s = measure.states();
  Matrix sum = Matrix::Zero(s.front().dim(), s.front().dim());
  for (std::size_t i = 0; i < w.size(); ++i) sum.noalias() += w[i] * s[i].matrix();
  return DensityMatrix::trusted(sum);
}

/// Both evaluations of the Holevo quantity.
struct ChiForms {
  /// sum_i w_i H(Phi(rho_i) || Phi(rho_bar)).
  ExtReal relative_form;
  /// H(Phi(rho_bar)) - sum_i w_i H(Phi(rho_i)).
  ExtReal entropy_form;
};

inline ChiForms chi_forms(const Channel& channel, const Ensemble& ensemble, const NumericConfig& cfg = default_config()) {
  if (ensemble.dim() != channel.dim_in()) throw DimensionMismatch("chi: ensemble dimension differs from channel input");
  const DensityMatrix avg_out = apply(channel, barycenter(ensemble));
  ExtReal rel(0.0);
  detail::Accumulator avg_entropy;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const DensityMatrix out = apply(channel, ensemble.states()[i]);
    rel = rel + ensemble.weights()[i] * relative_entropy(out, avg_out, cfg);
    avg_entropy.add(ensemble.weights()[i] * entropy(out, cfg).value());
  }
  const double h_avg = entropy(avg_out, cfg).value();
  return {rel, ExtReal(std::max(0.0, h_avg - avg_entropy.value()))};
}

/// Holevo quantity chi_Phi(pi). Computes both forms and throws
/// NumericalInconsistency if they disagree by more than `agreement_tol`.
inline ExtReal chi(const Channel& channel, const Ensemble& ensemble, const NumericConfig& cfg = default_config(),
                   double agreement_tol = 1e-9) {
  const ChiForms f = chi_forms(channel, ensemble, cfg);
  if (f.relative_form.is_infinite() || std::abs(f.relative_form.value() - f.entropy_form.value()) > agreement_tol)
    throw NumericalInconsistency("chi: relative-entropy form and entropy form disagree");
  return f.relative_form;
}

struct TruncatedChiForms {
  /// sum_i w_i H(P Phi(rho_i) P || P Phi(rho_bar) P).
  double relative_form;
  /// H(P Phi(rho_bar) P) - T log T |_{bar} - sum_i w_i [H(P Phi(rho_i) P) - T_i log T_i].
  double expanded_form;
};

inline TruncatedChiForms chi_truncated_forms(const Channel& channel, const Ensemble& ensemble, const Projector& p,
                                             const NumericConfig& cfg = default_config()) {
  if (p.dim() != channel.dim_out()) throw DimensionMismatch("chi_truncated: projector must act on the output space");
  if (ensemble.dim() != channel.dim_in()) throw DimensionMismatch("chi_truncated: ensemble dimension differs from channel input");
  const auto t_log_t = [&](double t) { return t > 0.0 ? t * std::log(t) * cfg.from_nats() : 0.0; };

  const PositiveOperator avg = compress(apply(channel, barycenter(ensemble)), p);
  detail::Accumulator rel, expanded;
  expanded.add(entropy(avg, cfg).value());
  expanded.add(-t_log_t(avg.trace()));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const double w = ensemble.weights()[i];
    const PositiveOperator out = compress(apply(channel, ensemble.states()[i]), p);
    const ExtReal d = relative_entropy(out, avg, cfg);
    if (d.is_infinite()) throw NumericalInconsistency("chi_truncated: compressed output escapes the compressed average");
    rel.add(w * d.value());
    expanded.add(-w * entropy(out, cfg).value());
    expanded.add(w * t_log_t(out.trace()));
  }
  return {rel.value(), expanded.value()};
}

/// Chi functional with every output compressed by P, using the unnormalized
/// relative entropy. Checks the expanded four-term identity to `agreement_tol`.
inline double chi_truncated(const Channel& channel, const Ensemble& ensemble, const Projector& p,
                            const NumericConfig& cfg = default_config(), double agreement_tol = 1e-9) {
  const TruncatedChiForms f = chi_truncated_forms(channel, ensemble, p, cfg);
  if (std::abs(f.relative_form - f.expanded_form) > agreement_tol)
    throw NumericalInconsistency("chi_truncated: relative form and expanded form disagree");
  return f.relative_form;
}

/// |sum w_i H(rho_i||sigma) - [sum w_i H(rho_i||rho_bar) + H(rho_bar||sigma)]|,
/// on channel outputs when a channel is given. Both sides infinite counts as
/// agreement (residual 0); exactly one side infinite gives +inf.
inline double donald_residual(const Ensemble& ensemble, const DensityMatrix& sigma,
                              const std::optional<Channel>& channel = std::nullopt,
                              const NumericConfig& cfg = default_config()) {
  const auto map = [&](const DensityMatrix& r) { return channel ? apply(*channel, r) : r; };
  const DensityMatrix avg = map(barycenter(ensemble));
  const Eigen::Index out_dim = avg.dim();
  if (sigma.dim() != out_dim) throw DimensionMismatch("donald_residual: sigma has the wrong dimension");

  ExtReal lhs(0.0), rhs(0.0);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const DensityMatrix r = map(ensemble.states()[i]);
    lhs = lhs + ensemble.weights()[i] * relative_entropy(r, sigma, cfg);
    rhs = rhs + ensemble.weights()[i] * relative_entropy(r, avg, cfg);
  }
  rhs = rhs + relative_entropy(avg, sigma, cfg);
  if (lhs.is_infinite() && rhs.is_infinite()) return 0.0;
  if (lhs.is_infinite() || rhs.is_infinite()) return std::numeric_limits<double>::infinity();
  return std::abs(lhs.value() - rhs.value());
}

/// Replaces every state by its spectral atoms {w_i lambda_ij, |u_ij><u_ij|}.
/// Eigenvalues at or below tol_rank * lambda_max are dropped; within a state,
/// atoms come in decreasing eigenvalue order.
inline Ensemble purify_ensemble(const Ensemble& ensemble, const NumericConfig& cfg = default_config()) {
  std::vector<double> w;
  std::vector<DensityMatrix> s;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const linalg::Spectrum sp = linalg::eigh(ensemble.states()[i].matrix());
    const double cut = cfg.tol_rank * sp.max();
    for (Eigen::Index j = sp.size() - 1; j >= 0; --j) {
      if (sp.values(j) <= cut) continue;
      w.push_back(ensemble.weights()[i] * sp.values(j));
      s.push_back(DensityMatrix::pure(sp.vectors.col(j)));
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return Ensemble(std::move(w), std::move(s));
}

/// Reduces a sampled measure to a finite ensemble with the same barycenter.
///
/// Atoms are visited by decreasing weight and placed first-fit into cells of
/// trace-norm radius < 1/(2n) around the cell's first atom, so every cell has
/// diameter < 1/n. The heaviest cells are kept until the remaining mass drops
/// below 1/n; the remainder is merged into one extra cell. Each output atom is
/// the normalized barycenter of its cell, weighted by the cell mass.
template <AtomicMeasure M>
Ensemble discretize(const M& measure, int n) {
  if (n < 1) throw InvalidResolution("discretize: resolution n must be >= 1");
  const auto& w = measure.weights();
  const auto& s = measure.states();
  if (w.empty()) throw EmptyEnsemble("discretize: empty measure");

  const Eigen::Index d = s.front().dim();
  const double radius = 0.5 / n;
  const double rank_factor = std::sqrt(static_cast<double>(d));

  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

  struct Cell {
    std::size_t center;
    detail::Accumulator mass;
    Matrix weighted_sum;
  };
  std::vector<Cell> cells;

  for (std::size_t idx : order) {
    const Matrix& rho = s[idx].matrix();
    Cell* home = nullptr;
    for (Cell& c : cells) {
      const Matrix diff = rho - s[c.center].matrix();
      const double frob = diff.norm();
      if (frob >= radius) continue;  // ||X||_1 >= ||X||_F
      if (rank_factor * frob < radius || linalg::trace_norm(diff) < radius) {
        home = &c;
        break;
      }
    }
    if (!home) {
      cells.push_back({idx, {}, Matrix::Zero(d, d)});
      home = &cells.back();
    }
    home->mass.add(w[idx]);
    home->weighted_sum.noalias() += w[idx] * rho;
  }

  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.mass.value() > b.mass.value(); });

  // Smallest m whose tail mass is < 1/n.
  std::vector<double> tail(cells.size() + 1, 0.0);
  for (std::size_t i = cells.size(); i-- > 0;) tail[i] = tail[i + 1] + cells[i].mass.value();
  std::size_t keep = 0;
  while (tail[keep] >= 1.0 / n) ++keep;

  std::vector<double> out_w;
  std::vector<Matrix> out_sum;
  for (std::size_t i = 0; i < keep; ++i) {
    out_w.push_back(cells[i].mass.value());
    out_sum.push_back(cells[i].weighted_sum);
  }
  if (keep < cells.size()) {
    detail::Accumulator mass;
    Matrix sum = Matrix::Zero(d, d);
    for (std::size_t i = keep; i < cells.size(); ++i) {
      mass.add(cells[i].mass.value());
      sum += cells[i].weighted_sum;
    }
    out_w.push_back(mass.value());
    out_sum.push_back(std::move(sum));
  }

  std::vector<double> weights;
  std::vector<DensityMatrix> states;
  detail::Accumulator total;
  for (std::size_t i = 0; i < out_w.size(); ++i) {
    if (out_w[i] < 1e-15) continue;
    weights.push_back(out_w[i]);
    states.push_back(DensityMatrix::trusted(out_sum[i] / out_w[i]));
    total.add(out_w[i]);
  }
  for (double& x : weights) x /= total.value();
  return Ensemble(std::move(weights), std::move(states));
}

}  // namespace chicap

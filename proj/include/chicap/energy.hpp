#pragma once

// Energy-type input constraints. An HConstraint is a positive operator with
// discrete spectrum stored diagonally in the standard basis, together with a
// bound h; the feasible set is the energy ball {rho : Tr rho H <= h}.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/errors.hpp"
#include "chicap/linalg.hpp"

namespace chicap {

/// Slack used by the closed energy ball.
inline constexpr double energy_ball_slack = 1e-12;

class HConstraint {
 public:
  HConstraint() = default;

  HConstraint(std::vector<double> energies, double bound) : energies_(std::move(energies)), bound_(bound) {
    if (energies_.empty()) throw InvalidConstraint("constraint needs at least one energy level");
    for (std::size_t k = 0; k < energies_.size(); ++k) {
      if (!(energies_[k] >= 0.0) || !std::isfinite(energies_[k]))
        throw InvalidConstraint("energies must be finite and nonnegative");
      if (k > 0 && energies_[k] < energies_[k - 1]) throw InvalidConstraint("energies must be nondecreasing");
    }
    if (!(bound_ > 0.0) || !std::isfinite(bound_)) throw InvalidConstraint("energy bound must be positive");
  }

  /// Number operator truncated at `dim` levels: energies 0, 1, ..., dim - 1.
  static HConstraint oscillator(Eigen::Index dim, double bound) {
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) e[static_cast<std::size_t>(k)] = static_cast<double>(k);
    return HConstraint(std::move(e), bound);
  }

  [[nodiscard]] const std::vector<double>& energies() const noexcept { return energies_; }
  [[nodiscard]] double bound() const noexcept { return bound_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(energies_.size()); }
  [[nodiscard]] double ground_energy() const { return energies_.front(); }

  [[nodiscard]] RealVector energy_vector() const {
    return Eigen::Map<const RealVector>(energies_.data(), dim());
  }
  [[nodiscard]] Matrix matrix() const { return energy_vector().cast<cplx>().asDiagonal(); }

 private:
  std::vector<double> energies_;
  double bound_ = 1.0;
};

inline double mean_energy(const DensityMatrix& rho, const HConstraint& h) {
  if (rho.dim() != h.dim()) throw DimensionMismatch("mean_energy: state and constraint dimensions differ");
  double s = 0.0;
  for (Eigen::Index k = 0; k < h.dim(); ++k) s += h.energies()[static_cast<std::size_t>(k)] * rho.matrix()(k, k).real();
  return s;
}

/// Mean energy of a pure state given by a (normalized) vector.
inline double mean_energy(const Vector& psi, const HConstraint& h) {
  if (psi.size() != h.dim()) throw DimensionMismatch("mean_energy: vector and constraint dimensions differ");
  return h.energy_vector().dot(psi.cwiseAbs2()) / psi.squaredNorm();
}

inline bool in_energy_ball(const DensityMatrix& rho, const HConstraint& h) {
  return mean_energy(rho, h) <= h.bound() + energy_ball_slack;
}

/// |sum_i w_i Tr rho_i H - Tr rho_bar H|; zero up to round-off by linearity.
inline double ensemble_energy_residual(const Ensemble& ensemble, const HConstraint& h) {
  detail::Accumulator avg;
  for (std::size_t i = 0; i < ensemble.size(); ++i) avg.add(ensemble.weights()[i] * mean_energy(ensemble.states()[i], h));
  return std::abs(avg.value() - mean_energy(barycenter(ensemble), h));
}

/// ln Tr exp(-beta H), stabilized by shifting out the ground energy.
inline double log_partition_function(const HConstraint& h, double beta) {
  if (!(beta > 0.0)) throw DegenerateTemperature("inverse temperature must be positive");
  const double e0 = h.ground_energy();
  double z = 0.0;
  for (double e : h.energies()) z += std::exp(-beta * (e - e0));
  return std::log(z) - beta * e0;
}

/// exp(-beta H) / Tr exp(-beta H), with beta in natural units.
inline DensityMatrix gibbs_state(const HConstraint& h, double beta) {
  if (!(beta > 0.0)) throw DegenerateTemperature("inverse temperature must be positive");
  const double e0 = h.ground_energy();
  RealVector p(h.dim());
  for (Eigen::Index k = 0; k < h.dim(); ++k) p(k) = std::exp(-beta * (h.energies()[static_cast<std::size_t>(k)] - e0));
  p /= p.sum();
  return DensityMatrix::trusted(p.cast<cplx>().asDiagonal().toDenseMatrix());
}

/// Residual of H(Phi(rho) || gibbs) = -H(Phi(rho)) + beta Tr Phi(rho) H' + log Z,
/// with the beta and log Z terms converted to the configured base.
inline double gibbs_identity_residual(const Channel& channel, const DensityMatrix& rho, const HConstraint& h_out,
                                      double beta, const NumericConfig& cfg = default_config()) {
  if (h_out.dim() != channel.dim_out()) throw DimensionMismatch("gibbs_identity_residual: constraint must act on the output");
  const DensityMatrix out = apply(channel, rho);
  const DensityMatrix gibbs = gibbs_state(h_out, beta);
  // The Gibbs state is full rank by construction; every positive eigenvalue
  // belongs to its support no matter how small.
  NumericConfig full_rank = cfg;
  full_rank.tol_rank = 0.0;
  const ExtReal lhs = relative_entropy(out, gibbs, full_rank);
  if (lhs.is_infinite()) throw NumericalInconsistency("gibbs_identity_residual: Gibbs state lost support to underflow");
  const double rhs =
      -entropy(out, cfg).value() + (beta * mean_energy(out, h_out) + log_partition_function(h_out, beta)) * cfg.from_nats();
  return std::abs(lhs.value() - rhs);
}

/// One run of the nested projector schedule: from index `n` on, P_n has `rank`.
struct RankStep {
  long long n;
  Eigen::Index rank;
};

struct HOperatorConstruction {
  /// Energies in `basis`, nondecreasing; bound = pi^2 / 6.
  HConstraint constraint;
  /// Unitary whose columns are the dominant eigenvectors of the family mean,
  /// in decreasing eigenvalue order. States enter as basis^dagger rho basis.
  Matrix basis;
  /// Run-length encoded ranks of P_n.
  std::vector<RankStep> schedule;
  /// max over the family of Tr rho H.
  double max_mean_energy = 0.0;
};

/// Energy of a state under an operator stored diagonally in `basis`.
inline double mean_energy(const DensityMatrix& rho, const HConstraint& h, const Matrix& basis) {
  return mean_energy(DensityMatrix::trusted(basis.adjoint() * rho.matrix() * basis), h);
}

/// Builds an unbounded-type energy operator H = sum_n n (Phat_{n+1} - Phat_n)
/// and bound h = pi^2/6 such that Tr rho H <= h on the whole family.
///
/// P_n projects onto the leading eigenvectors of the family mean, with the
/// smallest rank (>= 1) such that Tr rho P_n >= 1 - n^-3 for every member.
/// `user_ranks`, if given, fixes r_1, r_2, ... explicitly; each entry must
/// meet that mass test or ScheduleInfeasible is thrown. Levels whose mass is
/// below round-off for every member get the cap energy.
inline HOperatorConstruction h_operator_from_states(const std::vector<DensityMatrix>& family,
                                                    std::span<const Eigen::Index> user_ranks = {}) {
  if (family.empty()) throw InvalidArgument("h_operator_from_states: empty family");
  const Eigen::Index d = family.front().dim();
  Matrix mean = Matrix::Zero(d, d);
  for (const auto& rho : family) {
    if (rho.dim() != d) throw DimensionMismatch("h_operator_from_states: family members differ in dimension");
    mean += rho.matrix();
  }
  mean /= static_cast<double>(family.size());
  const linalg::Spectrum sp = linalg::eigh(mean);
  const Matrix basis = sp.vectors.rowwise().reverse();

  // deficiency[r] = max_rho (1 - Tr rho P_r), P_r = first r basis vectors.
  std::vector<double> deficiency(static_cast<std::size_t>(d) + 1, 0.0);
  deficiency[0] = 1.0;
  for (const auto& rho : family) {
    const RealVector diag = (basis.adjoint() * rho.matrix() * basis).diagonal().real();
    double inside = 0.0;
    for (Eigen::Index r = 1; r <= d; ++r) {
      inside += diag(r - 1);
      deficiency[static_cast<std::size_t>(r)] = std::max(deficiency[static_cast<std::size_t>(r)], 1.0 - inside);
    }
  }
  for (std::size_t r = 1; r < deficiency.size(); ++r)
    deficiency[r] = std::clamp(deficiency[r], 0.0, deficiency[r - 1]);

  constexpr double mass_slack = 1e-15;
  constexpr double saturated = 1e-15;
  const auto valid = [&](Eigen::Index r, long long n) {
    const double nd = static_cast<double>(n);
    return deficiency[static_cast<std::size_t>(r)] <= 1.0 / (nd * nd * nd) + mass_slack;
  };

  std::vector<RankStep> schedule;
  Eigen::Index rank = 0;
  long long n = 1;
  const auto push = [&](long long at, Eigen::Index r) {
    if (schedule.empty() || schedule.back().rank != r) schedule.push_back({at, r});
    rank = r;
  };

  for (std::size_t i = 0; i < user_ranks.size(); ++i, ++n) {
    const Eigen::Index r = user_ranks[i];
    if (r < 1 || r > d || r < rank)
      throw ScheduleInfeasible("schedule rank " + std::to_string(r) + " at n=" + std::to_string(n) + " is out of order or range");
    if (!valid(r, n))
      throw ScheduleInfeasible("rank " + std::to_string(r) + " misses the 1 - n^-3 mass at n=" + std::to_string(n));
    push(n, r);
  }

  while (rank < d) {
    Eigen::Index r = std::max<Eigen::Index>(rank, 1);
    while (!valid(r, n)) ++r;
    push(n, r);
    if (rank == d) break;
    const double def = deficiency[static_cast<std::size_t>(rank)];
    if (def <= saturated) break;
    // Next n at which the current rank stops meeting the mass test.
    long long next = static_cast<long long>(std::floor(std::cbrt(1.0 / def))) + 1;
    while (next > n + 1 && valid(rank, next - 1) == false) --next;
    n = std::max(next, n + 1);
  }

  const double cap_energy = std::floor(std::cbrt(1.0 / saturated));
  std::vector<double> energies(static_cast<std::size_t>(d), cap_energy);
  for (Eigen::Index k = 0; k < d; ++k)
    for (const RankStep& step : schedule)
      if (step.rank > k) {
        energies[static_cast<std::size_t>(k)] = static_cast<double>(step.n - 1);
        break;
      }

  HOperatorConstruction out{HConstraint(std::move(energies), std::numbers::pi * std::numbers::pi / 6.0), basis,
                            std::move(schedule), 0.0};
  for (const auto& rho : family) out.max_mean_energy = std::max(out.max_mean_energy, mean_energy(rho, out.constraint, basis));
  if (out.max_mean_energy > out.constraint.bound() + energy_ball_slack)
    throw NumericalInconsistency("h_operator_from_states: family member outside the constructed energy ball");
  return out;
}

}  // namespace chicap

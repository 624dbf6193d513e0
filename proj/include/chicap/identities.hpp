#pragma once

// Randomized residual suites for the exact identities the toolkit relies on:
// Donald's identity, the Gibbs-state expansion of relative entropy, the two
// forms of chi, and linearity of the mean energy.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/density.hpp"
#include "chicap/energy.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/random.hpp"

namespace chicap::identities {

struct SuiteResult {
  std::string name;
  int trials = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  [[nodiscard]] bool pass() const { return max_residual <= tolerance; }
};

struct Instance {
  Channel channel;
  Ensemble ensemble;
  DensityMatrix sigma;  // full-rank reference on the output
  HConstraint h_in;
  HConstraint h_out;
  double beta;
};

inline HConstraint random_constraint(Eigen::Index dim, random::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (double& x : e) x = u(rng);
  std::sort(e.begin(), e.end());
  return HConstraint(std::move(e), 1.0 + u(rng));
}

/// One random problem with input and output dimensions in [2, 8].
inline Instance random_instance(random::Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> dim(2, 8), kraus(1, 4);
  std::uniform_int_distribution<std::size_t> atoms(1, 5);
  std::uniform_real_distribution<double> beta(0.1, 10.0);
  const Eigen::Index d_in = dim(rng), d_out = dim(rng);
  const Eigen::Index min_kraus = (d_in + d_out - 1) / d_out;
  Channel ch = random::channel(d_in, d_out, std::max(kraus(rng), min_kraus), rng);
  Ensemble e = random::ensemble(d_in, atoms(rng), rng);
  DensityMatrix sigma = random::mixed_state(d_out, rng);
  HConstraint h_in = random_constraint(d_in, rng);
  HConstraint h_out = random_constraint(d_out, rng);
  return {std::move(ch), std::move(e), std::move(sigma), std::move(h_in), std::move(h_out), beta(rng)};
}

inline std::vector<SuiteResult> run_suites(std::uint64_t seed, int trials) {
  random::Rng rng(seed);
  SuiteResult donald{"donald", trials, 0.0, 1e-9};
  SuiteResult gibbs{"gibbs", trials, 0.0, 1e-9};
  SuiteResult two_form{"chi_two_forms", trials, 0.0, 1e-9};
  SuiteResult linear{"energy_linearity", trials, 0.0, 1e-12};
  for (int t = 0; t < trials; ++t) {
    const Instance in = random_instance(rng);
    donald.max_residual = std::max(donald.max_residual, donald_residual(in.ensemble, in.sigma, in.channel));
    const DensityMatrix avg = barycenter(in.ensemble);
    gibbs.max_residual = std::max(gibbs.max_residual, gibbs_identity_residual(in.channel, avg, in.h_out, in.beta));
    const ChiForms f = chi_forms(in.channel, in.ensemble);
    two_form.max_residual = std::max(two_form.max_residual, std::abs(f.relative_form.value() - f.entropy_form.value()));
    linear.max_residual = std::max(linear.max_residual, ensemble_energy_residual(in.ensemble, in.h_in));
  }
  return {donald, gibbs, two_form, linear};
}

}  // namespace chicap::identities

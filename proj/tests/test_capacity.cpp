#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "chicap/chicap.hpp"
#include "oracles.hpp"

using namespace chicap;

namespace {

oracle::Stochastic to_oracle(const RealMatrix& t) {
  oracle::Stochastic s(static_cast<std::size_t>(t.rows()), std::vector<double>(static_cast<std::size_t>(t.cols())));
  for (Eigen::Index j = 0; j < t.rows(); ++j)
    for (Eigen::Index i = 0; i < t.cols(); ++i) s[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = t(j, i);
  return s;
}

RealMatrix binary(double a, double b) {
  // P(1|0) = a, P(0|1) = b
  RealMatrix t(2, 2);
  t << 1 - a, b, a, 1 - b;
  return t;
}

Ensemble mix(const Ensemble& pi, const Ensemble& mu, double eta) {
  std::vector<double> w;
  std::vector<DensityMatrix> s;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    w.push_back((1 - eta) * pi.weights()[i]);
    s.push_back(pi.states()[i]);
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    w.push_back(eta * mu.weights()[i]);
    s.push_back(mu.states()[i]);
  }
  return Ensemble(w, s, 1e-9);
}

/// Maximizer of I((1 - x, x), T) on [0, hi] by ternary search (concave in x).
double best_binary_input(const oracle::Stochastic& t, double hi) {
  double lo = 0.0;
  for (int it = 0; it < 300; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (oracle::mutual_information(t, {1 - a, a}) < oracle::mutual_information(t, {1 - b, b}))
      lo = a;
    else
      hi = b;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(SolveCapacity, NoiselessChannels) {
  for (Eigen::Index d : {2, 3, 4}) {
    const CapacityReport r = solve_capacity(Channel::identity(d), std::nullopt);
    EXPECT_NEAR(r.chi_value, std::log2(static_cast<double>(d)), 1e-6) << "d=" << d;
    EXPECT_LE(r.certificate_gap, 1e-6);
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.constraint_active);
    EXPECT_FALSE(r.mean_energy.has_value());
  }
}

TEST(SolveCapacity, BinarySymmetricMatchesClosedForm) {
  const CapacityReport r = solve_capacity(classical_channel(binary(0.11, 0.11)), std::nullopt);
  EXPECT_NEAR(r.chi_value, 1.0 - oracle::h2(0.11), 1e-6);
  EXPECT_NEAR(r.chi_value, oracle::blahut_arimoto(to_oracle(binary(0.11, 0.11))), 1e-6);
  EXPECT_NEAR(r.chi_value, 0.5, 1e-3);
}

TEST(SolveCapacity, RandomClassicalChannelsMatchBlahutArimoto) {
  std::mt19937_64 rng(17);
  for (std::size_t n : {2u, 3u}) {
    for (int t = 0; t < 5; ++t) {
      const oracle::Stochastic s = oracle::random_stochastic(n, n, rng);
      RealMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s[j][i];
      const CapacityReport r = solve_capacity(classical_channel(m), std::nullopt);
      EXPECT_NEAR(r.chi_value, oracle::blahut_arimoto(s), 1e-6);
    }
  }
}

TEST(SolveCapacity, ConstrainedBinaryMatchesGrid) {
  const RealMatrix t = binary(0.05, 0.2);
  const auto s = to_oracle(t);
  for (double bound : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    const HConstraint h({0.0, 1.0}, bound);
    const CapacityReport r = solve_capacity(classical_channel(t), h);
    EXPECT_NEAR(r.chi_value, oracle::binary_grid_capacity(s, bound), 1e-4) << "h=" << bound;
    EXPECT_LE(mean_energy(barycenter(r.ensemble), h), bound + 1e-12);
    ASSERT_TRUE(r.mean_energy.has_value());
    EXPECT_LE(*r.mean_energy, bound + 1e-12);
  }
}

TEST(SolveCapacity, ReportInvariants) {
  random::Rng rng(5);
  for (int t = 0; t < 4; ++t) {
    const Channel ch = random::channel(3, 3, 2, rng);
    const HConstraint h({0.0, 1.0, 2.0}, 0.6);
    const CapacityReport r = solve_capacity(ch, h);
    EXPECT_NEAR(r.chi_value, chi(ch, r.ensemble).value(), 1e-12);
    EXPECT_TRUE(in_energy_ball(barycenter(r.ensemble), h));
    EXPECT_GE(r.lagrange_multiplier, 0.0);
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GE(r.trace[k].chi, r.trace[k - 1].chi - 1e-10);
    for (const auto& e : r.trace) EXPECT_TRUE(e.mean_energy.has_value());
    const Certificate c = certify_optimality(ch, r.ensemble, h);
    ASSERT_TRUE(c.gap.is_finite());
    EXPECT_LE(c.gap.value(), 1e-6);
    EXPECT_LE(r.chi_value, chi(ch, r.ensemble).value() + r.certificate_gap + 1e-9);
  }
}

TEST(SolveCapacity, CapRelationWithChiOfState) {
  random::Rng rng(6);
  for (int t = 0; t < 3; ++t) {
    const Channel ch = random::channel(2, 2, 2, rng);
    const CapacityReport cap = solve_capacity(ch, std::nullopt);
    const CapacityReport at = chi_of_state(ch, barycenter(cap.ensemble));
    EXPECT_NEAR(at.chi_value, cap.chi_value, 2e-6);
  }
}

TEST(SolveCapacity, InfeasibleConstraint) {
  EXPECT_THROW(solve_capacity(Channel::identity(2), HConstraint({0.5, 1.0}, 0.2)), Infeasible);
  EXPECT_THROW(solve_capacity(Channel::identity(2), HConstraint({0.0, 1.0, 2.0}, 0.2)), DimensionMismatch);
}

TEST(SolveCapacity, Deterministic) {
  random::Rng rng(7);
  const Channel ch = random::channel(3, 2, 3, rng);
  SolverOptions one;
  one.threads = 1;
  SolverOptions many;
  many.threads = 4;
  const CapacityReport a = solve_capacity(ch, std::nullopt, one);
  const CapacityReport b = solve_capacity(ch, std::nullopt, many);
  const CapacityReport c = solve_capacity(ch, std::nullopt, one);
  EXPECT_EQ(a.chi_value, b.chi_value);
  EXPECT_EQ(a.chi_value, c.chi_value);
  ASSERT_EQ(a.ensemble.size(), c.ensemble.size());
  for (std::size_t i = 0; i < a.ensemble.size(); ++i) EXPECT_EQ(a.ensemble.weights()[i], c.ensemble.weights()[i]);
  EXPECT_EQ(a.trace.size(), c.trace.size());
}

TEST(SolveCapacity, MaxItersCarriesBestReport) {
  random::Rng rng(8);
  const Channel ch = random::channel(4, 4, 2, rng);
  SolverOptions opts;
  opts.max_outer_iters = 1;
  opts.tol_gap = 1e-15;
  try {
    solve_capacity(ch, std::nullopt, opts);
    FAIL() << "expected MaxItersExceeded";
  } catch (const MaxItersExceeded& e) {
    EXPECT_GT(e.best_report().chi_value, 0.0);
    EXPECT_EQ(e.best_report().trace.size(), 1u);
    EXPECT_FALSE(e.best_report().converged);
  }
}

TEST(SolverOptions, Validation) {
  SolverOptions o;
  o.tol_gap = 0.0;
  EXPECT_THROW(solve_capacity(Channel::identity(2), std::nullopt, o), InvalidArgument);
  SolverOptions p;
  p.max_outer_iters = 0;
  EXPECT_THROW(solve_capacity(Channel::identity(2), std::nullopt, p), InvalidArgument);
}

TEST(OptimizeWeights, SingleStateAndSymmetricSupport) {
  random::Rng rng(9);
  const DensityMatrix rho = random::mixed_state(3, rng);
  const Ensemble one = optimize_weights(random::channel(3, 3, 2, rng), {rho}, std::nullopt);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.weights()[0], 1.0);

  const Ensemble sym = optimize_weights(Channel::identity(3), {DensityMatrix::basis(3, 0), DensityMatrix::basis(3, 1), DensityMatrix::basis(3, 2)},
                                        std::nullopt);
  ASSERT_EQ(sym.size(), 3u);
  for (double w : sym.weights()) EXPECT_NEAR(w, 1.0 / 3.0, 1e-9);
}

TEST(OptimizeWeights, BindingConstraintMatchesLineSearch) {
  const RealMatrix t = binary(0.02, 0.3);
  const auto s = to_oracle(t);
  const std::vector<DensityMatrix> support{DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)};
  for (double bound : {0.1, 0.25, 0.45, 0.9}) {
    const WeightSolution ws = optimize_weights_detailed(classical_channel(t), support, HConstraint({0.0, 1.0}, bound));
    const double x = best_binary_input(s, bound);
    double got = 0.0;
    for (std::size_t i = 0; i < ws.ensemble.size(); ++i)
      if (ws.ensemble.states()[i].matrix()(1, 1).real() > 0.5) got = ws.ensemble.weights()[i];
    EXPECT_NEAR(got, x, 1e-6) << "h=" << bound;
    EXPECT_LE(ws.kkt_residual, 1e-10);
    EXPECT_EQ(ws.constraint_active, x < bound - 1e-6 ? false : true);
  }
}

TEST(OptimizeWeights, Errors) {
  EXPECT_THROW(optimize_weights(Channel::identity(2), {}, std::nullopt), EmptyEnsemble);
  EXPECT_THROW(optimize_weights(Channel::identity(2), {DensityMatrix::basis(2, 1)}, HConstraint({0.0, 1.0}, 0.5)), Infeasible);
}

TEST(Certify, OptimalBasisEnsemble) {
  const Ensemble e({0.5, 0.5}, {DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)});
  const Certificate c = certify_optimality(Channel::identity(2), e, std::nullopt);
  ASSERT_TRUE(c.gap.is_finite());
  EXPECT_LE(c.gap.value(), 1e-9);
  EXPECT_TRUE(c.optimal);
}

TEST(Certify, DisjointSupportIsInfinite) {
  const Certificate c = certify_optimality(Channel::identity(2), Ensemble::single(DensityMatrix::basis(2, 0)), std::nullopt);
  EXPECT_TRUE(c.gap.is_infinite());
  EXPECT_FALSE(c.optimal);
}

TEST(Certify, RejectsInfeasibleBarycenter) {
  EXPECT_THROW(certify_optimality(Channel::identity(2), Ensemble::single(DensityMatrix::maximally_mixed(2)),
                                  HConstraint({0.0, 1.0}, 0.3)),
               Infeasible);
}

TEST(Certify, WitnessImprovesSuboptimalEnsembles) {
  random::Rng rng(10);
  const double eta = 1e-3;
  int checked = 0;
  for (int t = 0; t < 6; ++t) {
    const Channel ch = random::channel(2 + t % 2, 3, 2, rng);
    Ensemble pi = random::ensemble(ch.dim_in(), 1 + t % 2, rng, true);
    std::optional<HConstraint> h;
    if (t % 3 == 2) h = HConstraint::oscillator(ch.dim_in(), 2.0);
    const Certificate c = certify_optimality(ch, pi, h);
    // an infinite gap means a probe output escapes the support of the average
    if (c.gap.is_finite() && c.gap.value() <= 1e-3) continue;
    ++checked;
    const Ensemble mixed = mix(pi, c.witness, eta);
    EXPECT_GT(chi(ch, mixed).value(), chi(ch, pi).value());
    if (h) {
      EXPECT_TRUE(in_energy_ball(barycenter(mixed), *h));
    }
  }
  EXPECT_GE(checked, 3);
}

TEST(ChiOfState, NoiselessMaximallyMixed) {
  const CapacityReport r = chi_of_state(Channel::identity(2), DensityMatrix::maximally_mixed(2));
  EXPECT_NEAR(r.chi_value, 1.0, 1e-9);
  EXPECT_LT((barycenter(r.ensemble).matrix() - DensityMatrix::maximally_mixed(2).matrix()).cwiseAbs().maxCoeff(), 1e-12);
  for (const auto& s : r.ensemble.states()) EXPECT_EQ(support_projector(s).rank(), 1);
}

TEST(ChiOfState, ConstantChannelIsZero) {
  random::Rng rng(11);
  const Channel ch = constant_channel(3, random::mixed_state(2, rng));
  EXPECT_NEAR(chi_of_state(ch, random::mixed_state(3, rng)).chi_value, 0.0, 1e-12);
}

TEST(ChiOfState, DephasingMatchesBlochCircleGrid) {
  const double r2 = std::sqrt(0.5);
  Matrix z = Matrix::Identity(2, 2);
  z(1, 1) = -1.0;
  const Channel deph(2, 2, {r2 * Matrix::Identity(2, 2), r2 * z});
  // Antipodal pairs at polar angle theta decompose I/2; the output is diag((1 +- cos)/2).
  double min_out = 1.0;
  for (int k = 0; k <= 20000; ++k) {
    const double theta = std::numbers::pi * k / 20000.0;
    min_out = std::min(min_out, oracle::h2(0.5 * (1 + std::cos(theta))));
  }
  const double expected = 1.0 - min_out;
  EXPECT_NEAR(chi_of_state(deph, DensityMatrix::maximally_mixed(2)).chi_value, expected, 1e-4);
}

TEST(ChiOfState, NoiselessCounterexampleStateAttainsEntropy) {
  for (long long n : {2, 7}) {
    const DensityMatrix rho = counterexample::state_rho_n(n);
    const Channel ch = classical_channel(RealMatrix::Identity(n + 1, n + 1));
    EXPECT_NEAR(chi_of_state(ch, rho).chi_value, entropy(rho).value(), 1e-8);
  }
}

TEST(ChiOfState, RejectsWrongDimension) {
  EXPECT_THROW(chi_of_state(Channel::identity(2), DensityMatrix::maximally_mixed(3)), DimensionMismatch);
}

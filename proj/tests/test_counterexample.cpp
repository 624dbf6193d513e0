#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "chicap/chicap.hpp"
#include "oracles.hpp"

using namespace chicap;
namespace cx = chicap::counterexample;

TEST(SolveG, MatchesBisectionOracle) {
  for (double x : {1.0, 1.5, 2.0, 10.0, 1e3, 1e6, 1e9}) {
    const double g = cx::solve_g(x);
    EXPECT_NEAR(g, oracle::g_by_bisection(x), 1e-12 * std::max(1.0, g)) << "x=" << x;
    EXPECT_LE(std::abs(cx::g_equation(g, x)), 1e-12);
    EXPECT_GT(g, 0.0);
    EXPECT_LE(g, 1.0);
  }
}

TEST(SolveG, StrictlyDecreasing) {
  double prev = 2.0;
  for (double x = 1.0; x < 1e7; x *= 1.7) {
    const double g = cx::solve_g(x);
    EXPECT_LT(g, prev) << "x=" << x;
    prev = g;
  }
}

TEST(SolveG, RejectsOutOfDomain) {
  EXPECT_THROW(cx::solve_g(0.5), InvalidArgument);
  EXPECT_THROW(cx::solve_g(std::nan("")), InvalidArgument);
  EXPECT_THROW(cx::solve_g(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(GOde, ResidualExamples) {
  EXPECT_LE(cx::g_ode_residual(2.0, 1e-4), 1e-6);
  EXPECT_LE(cx::g_ode_residual(10.0, 1e-4), 1e-6);
  EXPECT_THROW(cx::g_ode_residual(1.0, 1e-4), InvalidArgument);
}

TEST(GOde, CentralDifferenceIsSecondOrder) {
  const double coarse = cx::g_ode_residual(2.0, 0.1);
  const double fine = cx::g_ode_residual(2.0, 0.05);
  EXPECT_GT(coarse / fine, 3.5);
  EXPECT_LT(coarse / fine, 4.5);
}

TEST(RhoN, StructureAndEntropy) {
  const std::vector<double> one = cx::rho_n_spectrum(1);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_NEAR(one[0], 1.0 - cx::solve_g(1.0), 1e-15);
  EXPECT_NEAR(one[1], cx::solve_g(1.0), 1e-15);
  for (long long n : {1, 3, 10, 100, 1000}) {
    const std::vector<double> p = cx::rho_n_spectrum(n);
    EXPECT_EQ(p.size(), static_cast<std::size_t>(n + 1));
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
    const double q = cx::solve_g(static_cast<double>(n));
    const double closed = oracle::h2(q) + q * std::log2(static_cast<double>(n));
    const DensityMatrix rho = cx::state_rho_n(n);
    EXPECT_NEAR(entropy(rho).value(), closed, 1e-10);
    EXPECT_NEAR(oracle::shannon_bits(p), closed, 1e-10);
  }
  EXPECT_THROW(cx::rho_n_spectrum(0), InvalidArgument);
  EXPECT_THROW(cx::state_rho_n(5000), InvalidArgument);
}

TEST(RhoN, ChiOfSpectralEnsembleEqualsEntropy) {
  for (long long n : {2, 20, 200}) {
    const DensityMatrix rho = cx::state_rho_n(n);
    const Channel noiseless = classical_channel(RealMatrix::Identity(n + 1, n + 1));
    const Ensemble spectral = purify_ensemble(Ensemble::single(rho));
    EXPECT_NEAR(chi(noiseless, spectral).value(), entropy(rho).value(), 1e-10);
    EXPECT_NEAR(chi(noiseless, Ensemble::single(rho)).value(), 0.0, 1e-12);
  }
}

TEST(HSequence, LogGridMonotoneAndBounded) {
  const auto grid = cx::log_grid(1000000);
  ASSERT_EQ(grid.size(), 7u);
  const auto pts = cx::h_sequence(1000000, grid);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i].n, grid[i]);
    EXPECT_EQ(pts[i].state_dim, grid[i] + 1);
    EXPECT_LE(pts[i].residual, 1e-12);
    EXPECT_LE(pts[i].h_value, 1.0);
    EXPECT_NEAR(pts[i].q_n, oracle::g_by_bisection(static_cast<double>(grid[i])), 1e-12);
    if (i > 0) {
      EXPECT_GT(pts[i].h_value, pts[i - 1].h_value);
      EXPECT_LT(pts[i].q_n, pts[i - 1].q_n);
    }
  }
  EXPECT_LT(1.0 - pts.back().h_value, 0.01);
}

TEST(HSequence, LinearGridMonotone) {
  std::vector<long long> grid(200);
  std::iota(grid.begin(), grid.end(), 1);
  const auto pts = cx::h_sequence(200, grid, 2);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GT(pts[i].h_value, pts[i - 1].h_value);
    EXPECT_LT(1.0 - pts[i].h_value, 1.0 - pts[i - 1].h_value);
  }
}

TEST(HSequence, LogGridShape) {
  EXPECT_EQ(cx::log_grid(1), (std::vector<long long>{1}));
  EXPECT_EQ(cx::log_grid(250), (std::vector<long long>{1, 10, 100, 250}));
  EXPECT_EQ(cx::log_grid(1000), (std::vector<long long>{1, 10, 100, 1000}));
}

TEST(HSequence, RejectsBadGrid) {
  EXPECT_THROW(cx::h_sequence(100, {}), InvalidArgument);
  EXPECT_THROW(cx::h_sequence(100, {10, 5}), InvalidArgument);
  EXPECT_THROW(cx::h_sequence(100, {1, 1000}), InvalidArgument);
  EXPECT_THROW(cx::h_sequence(100, {0, 10}), InvalidArgument);
}

TEST(GapReport, MillionPoint) {
  const cx::GapReport r = cx::gap_report(1000000);
  EXPECT_EQ(r.chi_limit_state, 0.0);
  EXPECT_GE(r.gap, 0.99);
  EXPECT_EQ(r.capacity_estimate, r.points.back().h_value);
  EXPECT_FALSE(r.conclusion.empty());
  EXPECT_THROW(cx::gap_report(5), InvalidArgument);
}

TEST(GapReport, EstimateNondecreasingInNmax) {
  double prev = 0.0;
  for (long long n : {10LL, 1000LL, 100000LL, 10000000LL}) {
    const double c = cx::gap_report(n).capacity_estimate;
    EXPECT_GE(c, prev);
    prev = c;
  }
}

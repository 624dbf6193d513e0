#include <gtest/gtest.h>

#include "chicap/chicap.hpp"
#include "oracles.hpp"

using namespace chicap;

namespace {

RealMatrix bsc(double p) {
  RealMatrix t(2, 2);
  t << 1 - p, p, p, 1 - p;
  return t;
}

}  // namespace

TEST(Apply, IdentityChannelReturnsInput) {
  random::Rng rng(1);
  const DensityMatrix rho = random::mixed_state(3, rng);
  EXPECT_TRUE(apply(Channel::identity(3), rho).matrix().isApprox(rho.matrix(), 1e-15));
}

TEST(Apply, ConstantChannelOutputsTarget) {
  random::Rng rng(2);
  const Channel ch = constant_channel(2, DensityMatrix::maximally_mixed(2));
  for (int t = 0; t < 5; ++t) {
    const DensityMatrix out = apply(ch, random::mixed_state(2, rng));
    EXPECT_LT((out.matrix() - Matrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(output_entropy(ch, random::pure_state(2, rng)).value(), 1.0, 1e-12);
  }
}

TEST(Apply, BinarySymmetricOnBasisState) {
  const DensityMatrix out = apply(classical_channel(bsc(0.1)), DensityMatrix::basis(2, 0));
  EXPECT_NEAR(out.matrix()(0, 0).real(), 0.9, 1e-15);
  EXPECT_NEAR(out.matrix()(1, 1).real(), 0.1, 1e-15);
}

TEST(ClassicalChannel, MatrixVectorProduct) {
  RealMatrix t(2, 2);
  t << 0.9, 0.2, 0.1, 0.8;
  const DensityMatrix out = apply(classical_channel(t), DensityMatrix::maximally_mixed(2));
  EXPECT_NEAR(out.matrix()(0, 0).real(), 0.55, 1e-15);
  EXPECT_NEAR(out.matrix()(1, 1).real(), 0.45, 1e-15);
}

TEST(ClassicalChannel, UniformColumnsGiveConstantChannel) {
  const RealMatrix t = RealMatrix::Constant(3, 3, 1.0 / 3.0);
  const Channel ch = classical_channel(t);
  random::Rng rng(4);
  const DensityMatrix out = apply(ch, random::mixed_state(3, rng));
  EXPECT_LT((out.matrix() - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ClassicalChannel, IdentityIsNoiseless) {
  const Channel ch = classical_channel(RealMatrix::Identity(4, 4));
  EXPECT_EQ(ch.kind(), ChannelKind::classical);
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  EXPECT_TRUE(apply(ch, DensityMatrix::diagonal(p)).matrix().isApprox(DensityMatrix::diagonal(p).matrix(), 1e-15));
}

TEST(ClassicalChannel, KrausFormAgreesWithFastPath) {
  random::Rng rng(5);
  const RealMatrix t = random::stochastic_matrix(3, 4, rng);
  const Channel ch = classical_channel(t);
  const Channel kraus_only(ch.dim_in(), ch.dim_out(), ch.kraus());
  for (int k = 0; k < 10; ++k) {
    const DensityMatrix rho = random::mixed_state(4, rng);
    const Matrix fast = apply(ch, rho).matrix();
    const Matrix slow = apply(kraus_only, rho).matrix();
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-14);
    const RealVector expected = t * rho.matrix().diagonal().real();
    EXPECT_LT((fast.diagonal().real() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClassicalChannel, RejectsNonStochastic) {
  RealMatrix rows_sum(2, 2);
  rows_sum << 0.9, 0.1, 0.3, 0.7;  // rows sum to 1, columns do not
  EXPECT_THROW(classical_channel(rows_sum), NotStochastic);
  RealMatrix negative(2, 2);
  negative << 1.1, 0.0, -0.1, 1.0;
  EXPECT_THROW(classical_channel(negative), NotStochastic);
}

TEST(Validate, IdentityPassesAndScaledIdentityFails) {
  EXPECT_TRUE(validate_channel(Channel::identity(3)).is_validated());
  try {
    validate_channel(Channel(2, 2, {0.5 * Matrix::Identity(2, 2)}));
    FAIL() << "expected NotTracePreserving";
  } catch (const NotTracePreserving& e) {
    EXPECT_NEAR(e.deviation(), 0.75, 1e-15);
  }
}

TEST(Validate, RandomIsometryChannelPasses) {
  random::Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Channel ch = random::channel(2 + t % 3, 3, 2, rng);
    EXPECT_LE(trace_preservation_defect(ch), 1e-12);
  }
}

TEST(Channel, RejectsBadKrausShapes) {
  EXPECT_THROW(Channel(2, 3, {Matrix::Identity(2, 2)}), DimensionMismatch);
  EXPECT_THROW(apply(Channel::identity(2), DensityMatrix::maximally_mixed(3)), DimensionMismatch);
}

TEST(ChannelProperties, TracePositivityLinearity) {
  random::Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index din = 2 + t % 4, dout = 2 + (t / 4) % 3;
    const Channel ch = random::channel(din, dout, (din + dout - 1) / dout + 1, rng);
    const DensityMatrix r1 = random::mixed_state(din, rng);
    const DensityMatrix r2 = random::mixed_state(din, rng);
    const DensityMatrix out = apply(ch, r1);
    EXPECT_NEAR(out.trace(), 1.0, 1e-9);
    EXPECT_GE(linalg::eigvalsh(out.matrix()).minCoeff(), -1e-10);
    const double a = 0.3;
    const Matrix lhs = apply_operator(ch, a * r1.matrix() + (1 - a) * r2.matrix());
    const Matrix rhs = a * apply(ch, r1).matrix() + (1 - a) * apply(ch, r2).matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Adjoint, DualityWithApply) {
  random::Rng rng(9);
  const Channel ch = random::channel(3, 4, 2, rng);
  const DensityMatrix rho = random::mixed_state(3, rng);
  const Matrix y = random::mixed_state(4, rng).matrix();
  EXPECT_NEAR(linalg::trace_product(apply(ch, rho).matrix(), y), linalg::trace_product(rho.matrix(), apply_adjoint(ch, y)),
              1e-13);
}

TEST(OutputEntropy, NoiselessChannelOnCounterexampleStates) {
  for (long long n : {1, 5, 40}) {
    const double q = counterexample::solve_g(static_cast<double>(n));
    const Channel ch = classical_channel(RealMatrix::Identity(n + 1, n + 1));
    EXPECT_NEAR(output_entropy(ch, counterexample::state_rho_n(n)).value(),
                oracle::h2(q) + q * std::log2(static_cast<double>(n)), 1e-10);
  }
}

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rbfmix/rbf.hpp"

using namespace rbfmix;

namespace {

Eigen::MatrixXd random_nodes(int k, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(k, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = u(rng);
  return x;
}

}  // namespace

TEST(Rbf, KernelNamesAndDegrees) {
  for (RbfKernel k : kAllKernels) EXPECT_EQ(parse_kernel(kernel_name(k)), k);
  EXPECT_FALSE(parse_kernel("spline").has_value());
  EXPECT_EQ(tail_degree(RbfKernel::Linear), 0);
  EXPECT_EQ(tail_degree(RbfKernel::Cubic), 1);
  EXPECT_EQ(tail_degree(RbfKernel::Multiquadric), 0);
  EXPECT_EQ(tail_degree(RbfKernel::ThinPlateSpline), 1);
  EXPECT_EQ(tail_degree(RbfKernel::Gaussian), -1);
  EXPECT_DOUBLE_EQ(RbfKind::with_default_shape(RbfKernel::Multiquadric).gamma, 0.1);
  EXPECT_DOUBLE_EQ(RbfKind::with_default_shape(RbfKernel::Gaussian).gamma, 1.0);
}

TEST(Rbf, KernelEval) {
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::Cubic}, 2.0), 8.0);
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::ThinPlateSpline}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::ThinPlateSpline}, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::Gaussian, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::Multiquadric, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval({RbfKernel::Linear}, 0.7), 0.7);
  EXPECT_THROW(kernel_eval({RbfKernel::Linear}, -1.0), Error);
}

TEST(Rbf, KernelMatchesOracle) {
  const oracle::Kernel ok[] = {oracle::Kernel::Linear, oracle::Kernel::Cubic, oracle::Kernel::Multiquadric,
                               oracle::Kernel::Tps, oracle::Kernel::Gaussian};
  for (std::size_t i = 0; i < kAllKernels.size(); ++i) {
    const RbfKind kind = RbfKind::with_default_shape(kAllKernels[i]);
    for (double r : {0.0, 0.1, 0.5, 1.0, 2.5}) EXPECT_NEAR(kernel_eval(kind, r), oracle::phi(ok[i], r, kind.gamma), 1e-14);
  }
}

TEST(Rbf, SystemDimensions) {
  const Eigen::MatrixXd x2 = (Eigen::MatrixXd(3, 2) << 0, 0, 1, 0, 0, 1).finished();
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(assemble_system({RbfKernel::Cubic}, x2, f, std::span<const int>{}).matrix.rows(), 6);
  EXPECT_EQ(assemble_system({RbfKernel::Gaussian, 1.0}, x2, f, std::span<const int>{}).matrix.rows(), 3);

  const ProblemSpec spec({{0.0, 1.0}, {0.0, 1.0}}, {}, {testutil::labels(3)}, testutil::sum_of_coords);
  const Eigen::MatrixXd x5 = (Eigen::MatrixXd(3, 5) << 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1).finished();
  const LinearSystem sys = assemble_system({RbfKernel::Cubic}, x5, f, spec);
  EXPECT_EQ(sys.matrix.rows(), 8);
  EXPECT_EQ(sys.matrix.cols(), 8);
  EXPECT_EQ(sys.eliminated_columns, std::vector<int>{4});
}

TEST(Rbf, DuplicateNodes) {
  const Eigen::MatrixXd x = (Eigen::MatrixXd(2, 1) << 0.3, 0.3).finished();
  EXPECT_THROW(assemble_system({RbfKernel::Cubic}, x, Eigen::VectorXd::Ones(2), std::span<const int>{}),
               DuplicateNodeError);
}

TEST(Rbf, SingleGaussianNode) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  const Interpolant m = fit({RbfKernel::Gaussian, 1.0}, x, Eigen::VectorXd::Constant(1, 7.0), std::span<const int>{});
  EXPECT_NEAR(m.lambda()[0], 7.0, 1e-14);
  EXPECT_EQ(m.alpha().size(), 0);
}

TEST(Rbf, AffineReproduction) {
  Rng rng = make_rng(21);
  for (RbfKernel k : {RbfKernel::Cubic, RbfKernel::ThinPlateSpline}) {
    const int n = 3;
    const Eigen::MatrixXd x = random_nodes(n + 1, n, rng);
    const Eigen::Vector3d a(1.5, -2.0, 0.25);
    const double b = 0.75;
    const Eigen::VectorXd f = (x * a).array() + b;
    const Interpolant m = fit({k}, x, f, std::span<const int>{});
    EXPECT_LE(m.lambda().cwiseAbs().maxCoeff(), 1e-8);
    ASSERT_EQ(m.alpha().size(), n + 1);
    for (int j = 0; j < n; ++j) EXPECT_NEAR(m.alpha()[j], a[j], 1e-8);
    EXPECT_NEAR(m.alpha()[n], b, 1e-8);
    EXPECT_NEAR(m.predict(Eigen::Vector3d(0.2, 0.4, 0.9)), a.dot(Eigen::Vector3d(0.2, 0.4, 0.9)) + b, 1e-8);
  }
}

TEST(Rbf, InterpolatesRandomData) {
  Rng rng = make_rng(22);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = random_nodes(5, 3, rng);
    Eigen::VectorXd f(5);
    for (int i = 0; i < 5; ++i) f[i] = u(rng);
    const Interpolant m = fit({RbfKernel::ThinPlateSpline}, x, f, std::span<const int>{});
    EXPECT_EQ(m.fit_method(), FitMethod::Direct);
    const Eigen::VectorXd pred = m.predict_batch(x);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(pred[i], f[i], 1e-6);
    EXPECT_LE(full_system_residual(m), 1e-6 * std::max(1.0, f.cwiseAbs().maxCoeff()));
  }
}

TEST(Rbf, MatchesOracleInterpolant) {
  Rng rng = make_rng(23);
  const Eigen::MatrixXd x = random_nodes(8, 2, rng);
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(8, -1.0, 3.0);
  const oracle::Model ref = oracle::interpolate(oracle::Kernel::Cubic, 0.0, x, f, {});
  const Interpolant m = fit({RbfKernel::Cubic}, x, f, std::span<const int>{});
  for (double a : {0.1, 0.5, 0.9}) {
    const Eigen::Vector2d q(a, 1.0 - a * a);
    EXPECT_NEAR(m.predict(q), ref(q.transpose()), 1e-8);
  }
}

TEST(Rbf, PureTailModel) {
  const Eigen::MatrixXd nodes = Eigen::MatrixXd::Zero(1, 2);
  Interpolant m({RbfKernel::Cubic}, nodes, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                Eigen::Vector3d(2.0, -1.0, 0.5), FitMethod::Direct, {});
  EXPECT_DOUBLE_EQ(m.predict(Eigen::Vector2d(3.0, 4.0)), 2.0 * 3.0 - 4.0 + 0.5);
}

TEST(Rbf, NonFiniteValues) {
  const Eigen::MatrixXd x = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  const Eigen::VectorXd f(Eigen::Vector2d(1.0, std::numeric_limits<double>::quiet_NaN()));
  EXPECT_THROW(fit({RbfKernel::Linear}, x, f, std::span<const int>{}), NonFiniteValueError);
}

TEST(Rbf, PredictDimensionMismatch) {
  const Eigen::MatrixXd x = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
  const Interpolant m = fit({RbfKernel::Linear}, x, Eigen::Vector2d(0.0, 1.0), std::span<const int>{});
  EXPECT_THROW(m.predict_batch(Eigen::MatrixXd::Zero(1, 2)), DimensionMismatchError);
}

TEST(Rbf, CollinearCubicFallsBackToLeastSquares) {
  const Eigen::MatrixXd x = (Eigen::MatrixXd(3, 2) << 0, 0, 0.5, 0.5, 1, 1).finished();
  const Interpolant m = fit({RbfKernel::Cubic}, x, Eigen::Vector3d(0.0, 1.0, 2.0), std::span<const int>{});
  EXPECT_EQ(m.fit_method(), FitMethod::LeastSquares);
  EXPECT_NEAR(m.predict(Eigen::Vector2d(0.5, 0.5)), 1.0, 1e-6);
}

TEST(Rbf, BumpinessGaussianClosedForm) {
  const Eigen::MatrixXd nodes = Eigen::MatrixXd::Zero(1, 2);
  for (double r : {0.3, 0.8, 1.5}) {
    const Eigen::Vector2d y(r * 0.6, r * 0.8);
    const auto mu = bumpiness_mu(nodes, {RbfKernel::Gaussian, 1.0}, y, std::span<const int>{});
    ASSERT_TRUE(mu.has_value());
    EXPECT_NEAR(*mu, 1.0 / (1.0 - std::exp(-2.0 * r * r)), 1e-10);
  }
  EXPECT_FALSE(bumpiness_mu(nodes, {RbfKernel::Gaussian, 1.0}, Eigen::Vector2d::Zero(), std::span<const int>{}));
}

TEST(Rbf, BatchedBumpinessMatchesReference) {
  Rng rng = make_rng(24);
  const Eigen::MatrixXd nodes = random_nodes(9, 2, rng);
  const Eigen::MatrixXd queries = random_nodes(20, 2, rng);
  for (RbfKernel k : kAllKernels) {
    const RbfKind kind = RbfKind::with_default_shape(k);
    const BumpinessEvaluator ev(kind, nodes, std::span<const int>{});
    const Eigen::VectorXd mu = ev.mu_batch(queries);
    for (int p = 0; p < queries.rows(); ++p) {
      const double ref = *bumpiness_mu(nodes, kind, queries.row(p).transpose(), std::span<const int>{});
      // The Gaussian system on these nodes has condition near 1e10.
      const double rel = k == RbfKernel::Gaussian ? 1e-4 : 1e-6;
      EXPECT_NEAR(mu[p], ref, rel * std::max(1.0, std::abs(ref))) << kernel_name(k);
      const double sign = kind.degree() % 2 == 0 ? -1.0 : 1.0;
      EXPECT_GE(sign * mu[p], -1e-10);
    }
    EXPECT_TRUE(std::isnan(ev.mu_batch(nodes.topRows(1))[0]));
  }
}

TEST(Rbf, ClipValues) {
  const Eigen::VectorXd f(Eigen::Vector4d(1.0, 2.0, 3.0, 1e6));
  const Eigen::VectorXd c = clip_values(f);
  EXPECT_DOUBLE_EQ(c[3], 2.5);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  const Eigen::VectorXd mild(Eigen::Vector3d(1.0, 2.0, 3.0));
  EXPECT_EQ(clip_values(mild), mild);
}

TEST(Rbf, SquaredDistances) {
  const Eigen::MatrixXd p = (Eigen::MatrixXd(1, 2) << 0, 0).finished();
  const Eigen::MatrixXd q = (Eigen::MatrixXd(2, 2) << 3, 4, 1, 0).finished();
  const Eigen::MatrixXd d = squared_distances(p, q);
  EXPECT_DOUBLE_EQ(d(0, 0), 25.0);
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(min_distances(p, q)[0], 1.0);
  EXPECT_TRUE(std::isinf(min_distances(p, Eigen::MatrixXd(0, 2))[0]));
}

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rbfmix/search.hpp"

using namespace rbfmix;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Search, GutmannTarget) {
  EXPECT_DOUBLE_EQ(gutmann_target(0, 5, 1.0, 5.0), -3.0);
  EXPECT_DOUBLE_EQ(gutmann_target(5, 5, 1.0, 5.0), 1.0);
  EXPECT_EQ(gutmann_target(kInfStep, 5, 1.0, 5.0), -kInf);
  EXPECT_DOUBLE_EQ(gutmann_target(2, 5, 1.0, 5.0), 1.0 - 9.0 / 25.0 * 4.0);
}

TEST(Search, GutmannH) {
  EXPECT_EQ(gutmann_h(0.0, std::nullopt, 1.0, 1), 0.0);
  EXPECT_DOUBLE_EQ(gutmann_h(0.0, 2.0, 1.0, 1), 0.5);
  EXPECT_DOUBLE_EQ(gutmann_h(0.0, -2.0, 1.0, 0), 0.5);
}

TEST(Search, MsrsmWeight) {
  EXPECT_DOUBLE_EQ(msrsm_weight(0, 5), 0.8);
  EXPECT_DOUBLE_EQ(msrsm_weight(4, 5), 0.05);
  EXPECT_EQ(msrsm_weight(5, 5), 0.0);
  EXPECT_EQ(msrsm_weight(kInfStep, 5), kInf);
}

TEST(Search, CycleAdvance) {
  CycleState c = CycleState::start(3, true);
  EXPECT_EQ(c.step, kInfStep);
  std::vector<int> seen;
  bool wrapped = false;
  while (!wrapped) {
    seen.push_back(c.step);
    wrapped = c.advance();
  }
  EXPECT_EQ(seen, (std::vector<int>{-1, 0, 1, 2, 3}));
  EXPECT_TRUE(c.at_cycle_start());
  CycleState d = CycleState::start(3, false);
  EXPECT_EQ(d.step, 0);
}

TEST(Search, ScoreVanishesAtIdealPoint) {
  const Eigen::VectorXd dist(Eigen::Vector3d(0.1, 0.5, 0.3));
  const Eigen::VectorXd s(Eigen::Vector3d(2.0, -1.0, 0.0));
  EXPECT_DOUBLE_EQ(msrsm_scores(dist, s, 1.0)[1], 0.0);
}

TEST(Search, ZeroWeightScoresSurrogateOnly) {
  const Eigen::VectorXd dist(Eigen::Vector3d(0.1, 0.5, 0.3));
  const Eigen::VectorXd s(Eigen::Vector3d(2.0, -1.0, 0.0));
  const Eigen::VectorXd sc = msrsm_scores(dist, s, 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sc[i], (s[i] + 1.0) / 3.0, 1e-15);
}

TEST(Search, InfiniteWeightPicksFarthest) {
  const Eigen::VectorXd dist(Eigen::Vector4d(0.1, 0.7, 0.3, 0.2));
  const Eigen::VectorXd s(Eigen::Vector4d(-5.0, 9.0, 0.0, 1.0));
  Eigen::Index arg = 0;
  msrsm_scores(dist, s, kInf).minCoeff(&arg);
  EXPECT_EQ(arg, 1);
}

TEST(Search, EmptyReferenceSet) {
  EXPECT_THROW(msrsm_scores(Eigen::VectorXd(), Eigen::VectorXd(), 0.5), Error);
}

TEST(Search, InfStepCentersInSquare) {
  const auto spec = testutil::continuous_box(2);
  const Eigen::MatrixXd corners = (Eigen::MatrixXd(4, 2) << 0, 0, 1, 0, 0, 1, 1, 1).finished();
  const Eigen::VectorXd f(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
  const Interpolant model = fit({RbfKernel::ThinPlateSpline}, corners, f, std::span<const int>{});
  SearchInput in{&spec, &model, &corners, 1.0, 4.0};
  SubsolverConfig sub = SubsolverConfig::make(SubsolverKind::Sampling, false);
  sub.sampling.samples_per_dimension = 50000;
  Rng rng = make_rng(41);
  const Proposal p = next_point(Algorithm::Msrsm, CycleState::start(5, true), in, sub, rng);
  EXPECT_LE((p.point - Eigen::Vector2d(0.5, 0.5)).norm(), 0.05);
}

TEST(Search, LocalStepShortcut) {
  const auto spec = testutil::continuous_box(1);
  const Eigen::MatrixXd nodes = (Eigen::MatrixXd(3, 1) << 0.0, 0.5, 1.0).finished();
  const Eigen::VectorXd f(Eigen::Vector3d(10.0, 12.0, 30.0));
  const Interpolant model = fit({RbfKernel::Cubic}, nodes, f, std::span<const int>{});
  SearchInput in{&spec, &model, &nodes, 10.0, 30.0};
  CycleState c = CycleState::start(5, false);
  c.step = 5;
  const SubsolverConfig sub = SubsolverConfig::make(SubsolverKind::Ga, false);
  for (Algorithm a : {Algorithm::Msrsm, Algorithm::Gutmann}) {
    Rng rng = make_rng(42);
    const Proposal p = next_point(a, c, in, sub, rng);
    ASSERT_EQ(p.point.size(), 1);
    EXPECT_GE(p.point[0], 0.0);
    EXPECT_LE(p.point[0], 1.0);
    if (p.shortcut) EXPECT_LT(*p.s_ystar, 10.0);
  }
}

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rbfmix/engine.hpp"
#include "rbfmix/testbed.hpp"
#include "rbfmix/trace_io.hpp"

using namespace rbfmix;

namespace {

ProblemSpec shifted_parabola() {
  return testutil::continuous_box(1, 0.0, 1.0, [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); });
}

void expect_prefix_min(const RunResult& r) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.trace.records) {
    if (std::isfinite(rec.f)) best = std::min(best, rec.f);
    EXPECT_EQ(rec.best, best);
  }
}

}  // namespace

TEST(Engine, OneDimensionalConvex) {
  OptimizerConfig cfg;
  cfg.budget = 30;
  cfg.seed = 1;
  const RunResult r = run(shifted_parabola(), cfg);
  EXPECT_LE(r.best_value, 1e-4);
  EXPECT_EQ(r.evaluations, 30);
  EXPECT_EQ(r.trace.size(), 30u);
  expect_prefix_min(r);
}

TEST(Engine, BudgetEqualsInitialDesign) {
  const ProblemSpec spec = testutil::continuous_box(4);
  const int n_init = initial_sample_count(4, 1);
  OptimizerConfig cfg;
  cfg.budget = n_init;
  const RunResult r = run(spec, cfg);
  ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(n_init));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.trace.records) {
    EXPECT_EQ(rec.phase, Phase::Init);
    best = std::min(best, rec.f);
  }
  EXPECT_EQ(r.best_value, best);
}

TEST(Engine, DefaultBudget) {
  const ProblemSpec spec({{0.0, 1.0}}, {}, {testutil::labels(3)}, testutil::sum_of_coords);
  EXPECT_EQ(OptimizerConfig{}.effective_budget(spec), 50 * 5);
}

TEST(Engine, InfStepDefaults) {
  OptimizerConfig cfg;
  EXPECT_FALSE(cfg.effective_infstep());
  cfg.algorithm = Algorithm::Gutmann;
  EXPECT_TRUE(cfg.effective_infstep());
  cfg.infstep = false;
  EXPECT_FALSE(cfg.effective_infstep());
}

TEST(Engine, MixedProblemGutmann) {
  const TestInstance inst = builtin("branin_cat");
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::Gutmann;
  cfg.budget = 40;
  cfg.seed = 3;
  const RunResult r = run(inst.spec, cfg);
  EXPECT_EQ(r.evaluations, 40);
  EXPECT_NO_THROW(validate(r.best_point, inst.spec));
  EXPECT_DOUBLE_EQ(inst.spec.evaluate(r.best_point), r.best_value);
  expect_prefix_min(r);
}

TEST(Engine, DeterministicUnderSimulatedClock) {
  const TestInstance inst = builtin("camel");
  OptimizerConfig cfg;
  cfg.budget = 35;
  cfg.seed = 9;
  cfg.simulated_latency = LatencyModel{};
  EXPECT_EQ(trace_csv_string(run(inst.spec, cfg).trace), trace_csv_string(run(inst.spec, cfg).trace));
}

TEST(Engine, NonFiniteValuesAreSkipped) {
  const ProblemSpec spec = testutil::continuous_box(2, 0.0, 1.0, [](std::span<const double> x) {
    return x[0] > 0.7 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 0.2) * (x[0] - 0.2) + x[1] * x[1];
  });
  OptimizerConfig cfg;
  cfg.budget = 30;
  const RunResult r = run(spec, cfg);
  EXPECT_EQ(r.evaluations, 30);
  EXPECT_TRUE(std::isfinite(r.best_value));
  EXPECT_LE(r.best_point[0], 0.7);
}

TEST(Engine, FixedKernel) {
  OptimizerConfig cfg;
  cfg.budget = 20;
  cfg.fixed_kernel = RbfKind{RbfKernel::Cubic};
  const RunResult r = run(shifted_parabola(), cfg);
  for (const auto& k : r.kernel_history) {
    EXPECT_EQ(k.local.kernel, RbfKernel::Cubic);
    EXPECT_EQ(k.global.kernel, RbfKernel::Cubic);
  }
}

TEST(Engine, RestorationReplacesDuplicate) {
  const ProblemSpec spec = testutil::continuous_box(2);
  Eigen::MatrixXd nodes(4, 2);
  nodes << 0.1, 0.1, 0.9, 0.2, 0.4, 0.8, 0.4, 0.8 + 1e-13;
  const RbfKind kind{RbfKernel::Cubic};
  EXPECT_FALSE(system_invertible(kind, nodes, std::span<const int>{}));
  Rng rng = make_rng(81);
  const auto res = restoration_step(nodes, spec, kind, SubsolverConfig{}, rng);
  ASSERT_TRUE(res.has_value());
  EXPECT_EQ(res->index, 3);
  Eigen::MatrixXd fixed = nodes;
  fixed.row(res->index) = res->point.transpose();
  EXPECT_TRUE(system_invertible(kind, fixed, std::span<const int>{}));
}

TEST(Engine, MaximinPointNearDenseOracle) {
  const ProblemSpec spec = testutil::continuous_box(2);
  Eigen::MatrixXd nodes(3, 2);
  nodes << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
  Rng rng = make_rng(82);
  const Eigen::VectorXd p = maximin_point(nodes, spec, SubsolverConfig{}, rng);
  auto mind = [&](const Eigen::Vector2d& q) { return (nodes.rowwise() - q.transpose()).rowwise().norm().minCoeff(); };
  double best = 0.0;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) best = std::max(best, mind(Eigen::Vector2d(i / 400.0, j / 400.0)));
  EXPECT_GE(mind(p), best - 1e-2);
}

TEST(Engine, PhaseNames) {
  for (Phase p : {Phase::Init, Phase::Global, Phase::Local, Phase::InfStep, Phase::Refine, Phase::Restore})
    EXPECT_EQ(parse_phase(phase_name(p)), p);
}

TEST(Engine, LatencyCap) {
  const LatencyModel m{3.0, 2.0, 50.0};
  Rng rng = make_rng(83);
  for (int i = 0; i < 1000; ++i) {
    const double t = m.sample(rng);
    EXPECT_GT(t, 0.0);
    EXPECT_LE(t, 50.0);
  }
}

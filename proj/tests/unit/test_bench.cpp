#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "rbfmix/bench.hpp"

using namespace rbfmix;

namespace {

ProfileTable two_problem_table() {
  ProfileTable t;
  t.problems = {"p1", "p2"};
  t.dims = {1, 3};
  t.algorithms = {"a"};
  t.t = {{20}, {std::nullopt}};
  return t;
}

}  // namespace

TEST(Bench, Converged) {
  EXPECT_TRUE(converged(10.0, 0.05, 0.0, 1e-2));
  EXPECT_FALSE(converged(10.0, 0.2, 0.0, 1e-2));
  EXPECT_TRUE(converged(4.0, 4.0, 4.0, 1e-4));
}

TEST(Bench, SolveIndex) {
  const std::vector<double> curve{10.0, 5.0, 0.5, 0.05, 0.0};
  EXPECT_EQ(solve_index(curve, 10.0, 0.0, 1e-2), 4);
  EXPECT_EQ(solve_index(curve, 10.0, 0.0, 1e-1), 3);
  EXPECT_FALSE(solve_index(std::vector<double>{10.0, 9.0}, 10.0, 0.0, 1e-2).has_value());
}

TEST(Bench, DataProfileExample) {
  const std::vector<double> alphas{10.0, 9.0, 4.0};
  // t = 20 on the n=1 problem: 20/2 = 10.
  const ProfileTable t = two_problem_table();
  EXPECT_EQ(data_profile(t, 0, alphas), (std::vector<double>{0.5, 0.0, 0.0}));
  // t = 20 on the n=3 problem: 20/4 = 5.
  ProfileTable u = two_problem_table();
  u.t = {{std::nullopt}, {20}};
  EXPECT_EQ(data_profile(u, 0, alphas), (std::vector<double>{0.5, 0.5, 0.0}));
}

TEST(Bench, DataProfileAllUnsolved) {
  ProfileTable t = two_problem_table();
  t.t = {{std::nullopt}, {std::nullopt}};
  const std::vector<double> alphas{1.0, 100.0, 1e9};
  EXPECT_EQ(data_profile(t, 0, alphas), (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Bench, DataProfileMonotone) {
  ProfileTable t;
  t.problems = {"a", "b", "c", "d"};
  t.dims = {1, 2, 3, 4};
  t.algorithms = {"x"};
  t.t = {{5}, {40}, {std::nullopt}, {12}};
  std::vector<double> alphas;
  for (int i = 0; i <= 40; ++i) alphas.push_back(i * 0.5);
  const auto d = data_profile(t, 0, alphas);
  EXPECT_TRUE(std::is_sorted(d.begin(), d.end()));
}

TEST(Bench, PerformanceRatios) {
  ProfileTable t;
  t.problems = {"p"};
  t.dims = {2};
  t.algorithms = {"a", "b"};
  t.t = {{10, 20}};
  const auto r = performance_ratios(t);
  EXPECT_EQ(r[0][0], 1.0);
  EXPECT_EQ(r[0][1], 2.0);
  const std::vector<double> one{1.0};
  EXPECT_EQ(performance_profile(t, 0, one)[0], 1.0);
  EXPECT_EQ(performance_profile(t, 1, one)[0], 0.0);
}

TEST(Bench, ShiftedGeomean) {
  EXPECT_DOUBLE_EQ(shifted_geomean(std::vector<double>{0.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(shifted_geomean(std::vector<double>{7.5}), 7.5);
  EXPECT_NEAR(shifted_geomean(std::vector<double>{4.0, 4.0, 4.0}), 4.0, 1e-12);
  EXPECT_THROW(shifted_geomean(std::vector<double>{}), Error);
}

TEST(Bench, MedianCurvePads) {
  const auto m = median_curve({{5.0, 3.0, 1.0}, {4.0, 2.0}, {6.0}});
  EXPECT_EQ(m, (std::vector<double>{5.0, 3.0, 2.0}));
}

TEST(Bench, ProfileTableRoundTrip) {
  ProfileTable t;
  t.tau = 1e-4;
  t.problems = {"branin", "camel"};
  t.dims = {2, 2};
  t.algorithms = {"msrsm", "gutmann"};
  t.t = {{17, std::nullopt}, {40, 33}};
  std::stringstream ss;
  write_profile_table(t, ss);
  const ProfileTable back = read_profile_table(ss);
  EXPECT_EQ(back.tau, t.tau);
  EXPECT_EQ(back.problems, t.problems);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.algorithms, t.algorithms);
  EXPECT_EQ(back.t, t.t);
  EXPECT_EQ(solved_count(back, 1), 1);
}

TEST(Bench, SingleRunSolveIndex) {
  SuiteConfig cfg;
  cfg.instances = {"camel"};
  AlgorithmVariant v;
  v.name = "msrsm";
  cfg.algorithms = {v};
  cfg.seeds = 1;
  cfg.budget = 30;
  cfg.taus = {1e-1};
  const SuiteResult r = run_suite(cfg);
  ASSERT_EQ(r.tables.size(), 1u);
  const auto& curve = r.curves[0][0];
  EXPECT_EQ(r.tables[0].t[0][0], solve_index(curve, r.f_x0[0], r.f_star[0], 1e-1));
}

TEST(Bench, IdenticalAlgorithmsGiveIdenticalProfiles) {
  SuiteConfig cfg;
  cfg.instances = {"branin", "camel"};
  AlgorithmVariant v;
  v.name = "a";
  v.config.simulated_latency = LatencyModel{};
  AlgorithmVariant w = v;
  w.name = "b";
  cfg.algorithms = {v, w};
  cfg.seeds = 2;
  cfg.budget = 30;
  cfg.out_dir = std::filesystem::temp_directory_path() / "rbfmix_bench_unit";
  std::filesystem::remove_all(cfg.out_dir);
  const SuiteResult r = run_suite(cfg);
  for (const auto& table : r.tables) {
    std::vector<double> alphas{1.0, 2.0, 5.0, 10.0, 20.0};
    EXPECT_EQ(data_profile(table, 0, alphas), data_profile(table, 1, alphas));
    EXPECT_EQ(performance_profile(table, 0, alphas), performance_profile(table, 1, alphas));
  }
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "summary.json"));
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(Bench, OriginalSpaceSharesFirstPoint) {
  const TestInstance inst = builtin("branin_cat");
  OptimizerConfig cfg;
  const auto design = shared_design(inst.spec, cfg, 3);
  const auto mapped = to_original_space(design, inst.spec);
  ASSERT_EQ(design.size(), mapped.size());
  const ProblemSpec orig = inst.spec.as_original_space();
  for (std::size_t i = 0; i < design.size(); ++i)
    EXPECT_EQ(decode(design[i], inst.spec), decode(mapped[i], orig));
}

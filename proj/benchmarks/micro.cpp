#include <benchmark/benchmark.h>

#include "rbfmix/design.hpp"
#include "rbfmix/engine.hpp"
#include "rbfmix/modelsel.hpp"
#include "rbfmix/rbf.hpp"
#include "rbfmix/subsolver.hpp"
#include "rbfmix/testbed.hpp"

using namespace rbfmix;

namespace {

Eigen::MatrixXd random_nodes(int k, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(k, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

Eigen::VectorXd values_for(const Eigen::MatrixXd& nodes) {
  Eigen::VectorXd f(nodes.rows());
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) f[i] = nodes.row(i).squaredNorm() + std::sin(5 * nodes(i, 0));
  return f;
}

void BM_Fit(benchmark::State& state) {
  Rng rng = make_rng(7);
  const Eigen::MatrixXd nodes = random_nodes(static_cast<int>(state.range(0)), 4, rng);
  const Eigen::VectorXd f = values_for(nodes);
  const RbfKind kind = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
  for (auto _ : state) benchmark::DoNotOptimize(fit(kind, nodes, f, std::span<const int>{}));
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(100)->Arg(300);

void BM_PredictBatch(benchmark::State& state) {
  Rng rng = make_rng(8);
  const Eigen::MatrixXd nodes = random_nodes(100, 4, rng);
  const Interpolant model =
      fit(RbfKind::with_default_shape(RbfKernel::Cubic), nodes, values_for(nodes), std::span<const int>{});
  const Eigen::MatrixXd pts = random_nodes(static_cast<int>(state.range(0)), 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch(pts));
}
BENCHMARK(BM_PredictBatch)->Arg(100)->Arg(1000);

void BM_Bumpiness(benchmark::State& state) {
  Rng rng = make_rng(9);
  const Eigen::MatrixXd nodes = random_nodes(60, 3, rng);
  const RbfKind kind = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
  const BumpinessEvaluator eval(kind, nodes, std::span<const int>{});
  const Eigen::MatrixXd pts = random_nodes(1000, 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eval.mu_batch(pts));
}
BENCHMARK(BM_Bumpiness);

void BM_CvScores(benchmark::State& state) {
  Rng rng = make_rng(10);
  const Eigen::MatrixXd nodes = random_nodes(static_cast<int>(state.range(0)), 3, rng);
  const Eigen::VectorXd f = values_for(nodes);
  const RbfKind kind = RbfKind::with_default_shape(RbfKernel::Cubic);
  for (auto _ : state) benchmark::DoNotOptimize(cv_scores(kind, nodes, f, std::span<const int>{}));
}
BENCHMARK(BM_CvScores)->Arg(20)->Arg(60);

void BM_LatinHypercube(benchmark::State& state) {
  const TestInstance inst = builtin("hartman6");
  Rng rng = make_rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(latin_hypercube(inst.spec, 7, rng));
}
BENCHMARK(BM_LatinHypercube);

void BM_GaMinimize(benchmark::State& state) {
  const TestInstance inst = builtin("hartman3");
  Rng rng = make_rng(12);
  const Eigen::MatrixXd nodes = random_nodes(40, 3, rng);
  const Interpolant model =
      fit(RbfKind::with_default_shape(RbfKernel::ThinPlateSpline), nodes, values_for(nodes), std::span<const int>{});
  const BatchObjective obj = [&](const Eigen::MatrixXd& x) { return model.predict_batch(x); };
  for (auto _ : state) benchmark::DoNotOptimize(ga_minimize(obj, inst.spec, GaConfig{}, rng));
}
BENCHMARK(BM_GaMinimize)->Unit(benchmark::kMillisecond);

void BM_BraninRun(benchmark::State& state) {
  const TestInstance inst = builtin("branin");
  OptimizerConfig cfg;
  cfg.budget = 60;
  for (auto _ : state) benchmark::DoNotOptimize(run(inst.spec, cfg));
}
BENCHMARK(BM_BraninRun)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();

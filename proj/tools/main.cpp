// rbfmix command-line tool: solve problem files, run benchmark suites.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rbfmix/bench.hpp"
#include "rbfmix/parallel.hpp"
#include "rbfmix/problem_io.hpp"
#include "rbfmix/testbed.hpp"
#include "rbfmix/trace_io.hpp"

namespace fs = std::filesystem;
using namespace rbfmix;

namespace {

struct SolveFlags {
  std::string file;
  std::string config;
  std::string algorithm;
  std::string subsolver;
  std::optional<int> budget;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string rbf;
  std::optional<int> refine_freq;
  std::optional<int> kappa;
  std::string latency;
  std::string out;
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RBFMIX_OUT_DIR"); env && *env) return env;
  return ".";
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size() || !(v > 0.0 && v < 1.0)) throw Error("bad tau '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty tau list");
  return out;
}

int solve(const SolveFlags& f) {
  ProblemFile problem = load_problem(f.file);
  OptimizerConfig cfg = problem.config.value_or(OptimizerConfig{});
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  if (f.algorithm == "msrsm") cfg.algorithm = Algorithm::Msrsm;
  if (f.algorithm == "gutmann") cfg.algorithm = Algorithm::Gutmann;
  if (f.subsolver == "ga") cfg.subsolver = SubsolverKind::Ga;
  if (f.subsolver == "sampling") cfg.subsolver = SubsolverKind::Sampling;
  if (f.budget) cfg.budget = *f.budget;
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.rbf.empty()) cfg.fixed_kernel = parse_rbf_option(f.rbf);
  if (f.refine_freq) cfg.refine.t_rf = *f.refine_freq;
  if (f.kappa) cfg.kappa = *f.kappa;
  if (!f.latency.empty()) cfg.simulated_latency = parse_latency(f.latency);

  RunResult result = cfg.threads >= 2
                         ? run_parallel(problem.spec, cfg, cfg.threads,
                                        cfg.simulated_latency ? ExecutorKind::Simulated : ExecutorKind::Threads)
                         : run(problem.spec, cfg);

  const fs::path dir = output_dir(f.out);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / (problem.name + "_trace.csv"));
    write_trace_csv(result.trace, out);
  }
  {
    std::ofstream out(dir / (problem.name + "_summary.json"));
    write_summary_json(summarize(result, cfg), out);
  }

  std::cout << "best value: " << format_double(result.best_value) << "\n";
  std::cout << "best point:";
  for (Eigen::Index i = 0; i < result.best_point.size(); ++i) {
    const std::string& name = problem.variable_names[static_cast<std::size_t>(i)];
    const int j = static_cast<int>(i);
    std::cout << ' ' << name << '=';
    if (j >= problem.spec.n_continuous() + problem.spec.n_integer()) {
      const int h = j - problem.spec.n_continuous() - problem.spec.n_integer();
      std::cout << problem.spec.category_labels(h)[static_cast<std::size_t>(result.best_point[i]) - 1];
    } else {
      std::cout << format_double(result.best_point[i]);
    }
  }
  std::cout << "\nevaluations: " << result.evaluations << "\n";
  if (result.aborted) {
    std::cerr << "aborted: " << result.abort_reason << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-model optimizer for mixed continuous, integer and categorical problems"};
  app.require_subcommand(0, 1);
  bool list_flag = false;
  app.add_flag("--list-instances", list_flag, "List built-in test instances");

  SolveFlags sf;
  auto* solve_cmd = app.add_subcommand("solve", "Optimize the problem described by a JSON file");
  solve_cmd->add_option("file", sf.file, "Problem file")->required();
  solve_cmd->add_option("--config", sf.config, "JSON file with optimizer settings");
  solve_cmd->add_option("--algorithm", sf.algorithm)->check(CLI::IsMember({"msrsm", "gutmann"}));
  solve_cmd->add_option("--subsolver", sf.subsolver)->check(CLI::IsMember({"ga", "sampling"}));
  solve_cmd->add_option("--budget", sf.budget, "Function evaluations")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", sf.seed);
  solve_cmd->add_option("--threads", sf.threads, "Parallel workers")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--rbf", sf.rbf)
      ->check(CLI::IsMember({"auto", "linear", "cubic", "multiquadric", "thin_plate", "thin_plate_spline", "gaussian"}));
  solve_cmd->add_option("--refine-freq", sf.refine_freq, "Cycles between refinement phases")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--kappa", sf.kappa, "Global steps per cycle")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--simulate-latency", sf.latency, "lognormal:mu,sigma,cap");
  solve_cmd->add_option("--out", sf.out, "Output directory (default $RBFMIX_OUT_DIR or .)");

  auto* list_cmd = app.add_subcommand("list-instances", "List built-in test instances");

  auto* bench_cmd = app.add_subcommand("bench", "Benchmark suites");
  bench_cmd->require_subcommand(1);
  auto* bench_run = bench_cmd->add_subcommand("run", "Run a suite and write profiles");
  std::string suite_file, taus, bench_out;
  std::optional<int> seeds, bench_threads;
  bench_run->add_option("--suite", suite_file, "Suite JSON file")->required();
  bench_run->add_option("--seeds", seeds)->check(CLI::PositiveNumber);
  bench_run->add_option("--tau", taus, "Comma-separated tolerances");
  bench_run->add_option("--threads", bench_threads, "Concurrent runs")->check(CLI::PositiveNumber);
  bench_run->add_option("--out", bench_out, "Output directory (default $RBFMIX_OUT_DIR or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (list_flag || list_cmd->parsed()) {
      for (const auto& name : builtin_names()) std::cout << name << "\n";
      return 0;
    }
    if (solve_cmd->parsed()) return solve(sf);
    if (bench_run->parsed()) {
      SuiteConfig suite = load_suite(suite_file);
      if (seeds) suite.seeds = *seeds;
      if (!taus.empty()) suite.taus = parse_taus(taus);
      if (bench_threads) suite.threads = *bench_threads;
      if (!bench_out.empty() || suite.out_dir.empty()) suite.out_dir = output_dir(bench_out);
      const SuiteResult res = run_suite(suite);
      for (const auto& table : res.tables) {
        std::cout << "tau " << table.tau << ":";
        for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
          std::cout << ' ' << table.algorithms[a] << '=' << solved_count(table, a) << '/' << table.problems.size();
        }
        std::cout << "\n";
      }
      return 0;
    }
    std::cout << app.help();
    return 1;
  } catch (const ProblemFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

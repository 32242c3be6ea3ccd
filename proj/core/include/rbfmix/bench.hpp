#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbfmix/engine.hpp"
#include "rbfmix/testbed.hpp"

namespace rbfmix {

/// f_x0 - f_best >= (1 - tau)(f_x0 - f_star). A zero gap counts as converged.
bool converged(double f_x0, double f_best, double f_star, double tau);

/// First 1-based index at which `curve` (best-so-far values) converges.
std::optional<int> solve_index(std::span<const double> curve, double f_x0, double f_star, double tau);

/// Per-iteration median of best-so-far curves. Shorter curves are extended
/// with their last value.
std::vector<double> median_curve(const std::vector<std::vector<double>>& curves);

/// (prod (t_i + 1))^(1/k) - 1. Throws on an empty input.
double shifted_geomean(std::span<const double> times);

struct ProfileTable {
  double tau = 1e-2;
  std::vector<std::string> problems;
  std::vector<int> dims;  ///< n_p
  std::vector<std::string> algorithms;
  /// t[p][a]: evaluations needed to solve, empty when unsolved.
  std::vector<std::vector<std::optional<int>>> t;
};

/// d_a(alpha) = |{p : t_pa / (n_p + 1) <= alpha}| / |P| for each alpha.
std::vector<double> data_profile(const ProfileTable& table, std::size_t algorithm, std::span<const double> alphas);

/// r_pa = t_pa / min_a t_pa over problems solved by some algorithm; the
/// fraction of those problems with r_pa <= alpha. Problems nobody solved
/// are left out.
std::vector<double> performance_profile(const ProfileTable& table, std::size_t algorithm,
                                        std::span<const double> alphas);

/// Performance ratios; empty entries where undefined or unsolved.
std::vector<std::vector<std::optional<double>>> performance_ratios(const ProfileTable& table);

/// Number of problems algorithm `a` solves.
int solved_count(const ProfileTable& table, std::size_t algorithm);

void write_profile_table(const ProfileTable& table, std::ostream& out);
ProfileTable read_profile_table(std::istream& in);

struct AlgorithmVariant {
  std::string name;
  OptimizerConfig config;
  /// Optimize over the original space (categorical variables as integers),
  /// starting from the extended-space design mapped across.
  bool original_space = false;
};

struct SuiteConfig {
  std::vector<std::string> instances;
  std::vector<AlgorithmVariant> algorithms;
  int seeds = 5;
  std::uint64_t first_seed = 1;
  std::vector<double> taus{1e-2, 1e-4};
  /// Evaluation budget; default 50(n+1) with n the extended dimension.
  std::optional<int> budget;
  /// Concurrent runs.
  int threads = 1;
  /// Output directory; nothing is written when empty.
  std::filesystem::path out_dir;
};

struct SuiteRun {
  std::vector<double> curve;
  double wall_clock = 0.0;
  bool failed = false;
  std::string error;
};

struct SuiteResult {
  std::vector<std::string> instances;
  std::vector<int> dims;
  std::vector<int> budgets;
  std::vector<std::string> algorithms;
  /// runs[p][a][seed]
  std::vector<std::vector<std::vector<SuiteRun>>> runs;
  /// Median best-so-far curve per (p, a).
  std::vector<std::vector<std::vector<double>>> curves;
  std::vector<double> f_x0;
  std::vector<double> f_star;
  std::vector<ProfileTable> tables;  ///< one per tau
};

/// Initial design shared by every algorithm for a given seed.
std::vector<ExtendedPoint> shared_design(const ProblemSpec& spec, const OptimizerConfig& cfg, std::uint64_t seed);

/// Maps extended-space points of `spec` to points of spec.as_original_space().
std::vector<ExtendedPoint> to_original_space(const std::vector<ExtendedPoint>& design, const ProblemSpec& spec);

/// Runs one replication of `variant` on `instance`.
RunResult run_variant(const TestInstance& instance, const AlgorithmVariant& variant, std::uint64_t seed, int budget);

SuiteResult run_suite(const SuiteConfig& cfg);

/// Recomputes f_x0, f_star and the profile tables from curves and runs.
void compute_profiles(SuiteResult& result, const std::vector<std::optional<double>>& known_best,
                      const std::vector<double>& taus);

/// Profile tables, profile curves (CSV and SVG), median curves and summary.json.
void write_suite_reports(const SuiteResult& result, const std::filesystem::path& out_dir);

/// Reads a suite description (JSON) from `path`.
SuiteConfig load_suite(const std::filesystem::path& path);

}  // namespace rbfmix

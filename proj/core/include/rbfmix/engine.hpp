#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/design.hpp"
#include "rbfmix/problem.hpp"
#include "rbfmix/rbf.hpp"
#include "rbfmix/refine.hpp"
#include "rbfmix/search.hpp"
#include "rbfmix/subsolver.hpp"

namespace rbfmix {

enum class Phase { Init, Global, Local, InfStep, Refine, Restore };

std::string_view phase_name(Phase p);
std::optional<Phase> parse_phase(std::string_view name);

/// Log-normal evaluation latency in seconds, truncated at `cap`.
struct LatencyModel {
  double mu = 3.0;
  double sigma = 0.5;
  double cap = 300.0;

  double sample(Rng& rng) const;
};

struct TraceRecord {
  int index = 0;
  Phase phase = Phase::Init;
  OriginalPoint point;
  ExtendedPoint xpoint;
  double f = 0.0;
  double best = 0.0;
  double wall_clock = 0.0;
};

struct EvaluationTrace {
  std::vector<TraceRecord> records;

  std::size_t size() const { return records.size(); }
  /// best-so-far after each evaluation
  std::vector<double> best_curve() const;
};

struct KernelChoiceRecord {
  int evaluations = 0;
  RbfKind local;
  RbfKind global;
};

struct ParallelStats {
  int workers = 0;
  int max_in_flight = 0;
  int duplicate_evaluations = 0;
  int duplicate_proposals_dropped = 0;
  int temporaries_created = 0;
  int temporaries_converted = 0;
  int max_temporaries_outstanding = 0;
  int type2_tasks = 0;
  int refinement_tasks = 0;
  bool invariants_ok = true;
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Msrsm;
  SubsolverKind subsolver = SubsolverKind::Ga;
  bool intensive_subsolver = false;
  /// Default 50(n+1) with n the extended dimension.
  std::optional<int> budget;
  double wall_clock_limit = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  /// Seed of the initial-design stream; defaults to `seed`. Runs sharing it
  /// share their initial designs.
  std::optional<std::uint64_t> design_seed;
  /// Empty: automatic model selection.
  std::optional<RbfKind> fixed_kernel;
  int t_mcv = 20;
  bool refine_enabled = true;
  RefineConfig refine;
  int kappa = 5;
  /// Default: on for Gutmann, off for MSRSM.
  std::optional<bool> infstep;
  MsrsmVariant msrsm_variant = MsrsmVariant::UnitSecondTerm;
  bool clip_codomain = true;
  InitConfig init;
  /// Replaces the generated initial design.
  std::optional<std::vector<ExtendedPoint>> initial_design;
  /// When set, wall-clock values come from a simulated clock that advances by
  /// a sampled latency per evaluation.
  std::optional<LatencyModel> simulated_latency;
  int max_restart_failures = 3;

  int threads = 1;
  double refine_fraction_cap = 0.25;
  /// Simulated duration of a point-selection task.
  double type2_compute_time = 0.0;

  int effective_budget(const ProblemSpec& spec) const;
  bool effective_infstep() const;
  SubsolverConfig subsolver_config() const;
};

struct RunResult {
  ExtendedPoint best_x;
  OriginalPoint best_point;
  double best_value = std::numeric_limits<double>::infinity();
  EvaluationTrace trace;
  int evaluations = 0;
  int restarts = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<KernelChoiceRecord> kernel_history;
  std::optional<ParallelStats> parallel;
};

/// Serial optimizer.
RunResult run(const ProblemSpec& spec, const OptimizerConfig& cfg);

struct RestorationResult {
  int index = 0;  ///< row of `nodes` that was replaced
  Eigen::VectorXd point;
};

/// Tries i = k..1: replaces node i by an approximate maximizer of the
/// distance to the other nodes, keeping the swap when the system becomes
/// invertible. Empty when every i fails.
std::optional<RestorationResult> restoration_step(const Eigen::MatrixXd& nodes, const ProblemSpec& spec,
                                                  const RbfKind& kind, const SubsolverConfig& sub, Rng& rng);

/// Approximate maximizer of the distance to `nodes` (unit coordinates).
Eigen::VectorXd maximin_point(const Eigen::MatrixXd& nodes, const ProblemSpec& spec, const SubsolverConfig& sub,
                              Rng& rng);

/// Initial design for a run: the configured override, else a checked maximin
/// latin hypercube, else the best unchecked one.
std::vector<ExtendedPoint> make_initial_design(const ProblemSpec& spec, const OptimizerConfig& cfg, int count,
                                               Rng& design_rng);

}  // namespace rbfmix

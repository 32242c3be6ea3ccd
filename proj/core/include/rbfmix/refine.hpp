#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/problem.hpp"

namespace rbfmix {

struct RefineConfig {
  double beta_mr = 1e-3;
  double beta_rm = 1.0;
  double kappa_rs = 0.25;
  double kappa_re = 0.75;
  double kappa_rm = 0.0;
  int t_rf = 3;
  int t_rs = 5;
  double eps_grad = 1e-3;
  int rounding_trials = 10;

  /// Throws Error on inconsistent thresholds.
  void validate() const;
};

enum class RefineStop { IterationLimit, RadiusTooSmall, GradientSmall, GeometryFailure, BudgetExhausted };

std::string_view stop_name(RefineStop s);

/// Unit extended coordinates with the eliminated slot of every non-binary
/// unary block dropped; the dropped slot is implied as 1 minus the others.
class ReducedMap {
 public:
  explicit ReducedMap(const ProblemSpec& spec);

  int dim() const { return static_cast<int>(kept_.size()); }
  Eigen::VectorXd reduce(const Eigen::VectorXd& unit) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
  bool feasible(const Eigen::VectorXd& reduced, double tol = 1e-12) const;
  /// Clips into the box and scales down unary blocks whose kept slots sum above 1.
  Eigen::VectorXd clip(const Eigen::VectorXd& reduced) const;
  /// Largest t in [0, t_max] with x + t d feasible.
  double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double t_max) const;
  /// Nearest feasible mixed point: integers to the nearest grid value, unary
  /// blocks to the nearest basis vector in l1 distance.
  Eigen::VectorXd project_discrete(const Eigen::VectorXd& reduced) const;
  /// Length in unit coordinates of one discrete step at each reduced
  /// position; 0 for continuous positions.
  Eigen::VectorXd discrete_steps() const;

 private:
  const ProblemSpec* spec_;
  std::vector<int> kept_;
  // For each non-binary block: positions in the reduced vector of its kept slots.
  std::vector<std::vector<int>> block_slots_;
};

struct RefinementState {
  std::vector<Eigen::VectorXd> S;  ///< reduced coordinates
  std::vector<double> S_values;
  Eigen::VectorXd x_bar;
  double f_bar = 0.0;
  double rho = 0.0;
  Eigen::VectorXd c;
  double b = 0.0;
  int iterations_done = 0;
  int repair_attempts = 0;
  std::optional<RefineStop> stop_reason;
};

/// A point the refinement wants evaluated next.
struct RefineProposal {
  enum class Kind { Repair, Step };
  Kind kind = Kind::Step;
  Eigen::VectorXd point;  ///< reduced coordinates
  Eigen::VectorXd unit;   ///< unit extended coordinates
  std::size_t replace = 0;  ///< member of S replaced by a repair point
};

/// Evaluates f at a point given in unit extended coordinates. Empty when the
/// evaluation budget is exhausted.
using UnitEvaluator = std::function<std::optional<double>(const Eigen::VectorXd&)>;

/// Builds S from the n+1 points nearest the incumbent (n = reduced dimension).
/// Empty when fewer than n+1 points are available.
std::optional<RefinementState> init_refinement(const Eigen::MatrixXd& unit_nodes, const Eigen::VectorXd& values,
                                               const ProblemSpec& spec, const RefineConfig& cfg);

/// Replaces points of S until it is affinely independent. Returns the last
/// inserted point (reduced coordinates), or empty when no repair was needed.
/// Sets stop_reason on failure.
std::optional<Eigen::VectorXd> geometry_repair(RefinementState& state, const ProblemSpec& spec,
                                               const UnitEvaluator& evaluate, Rng& rng);

/// Smallest singular value of the matrix of S - x_bar columns.
double geometry_quality(const RefinementState& state);

/// Least-squares linear model (c, b) over S.
void fit_linear_model(RefinementState& state);

void refinement_iteration(RefinementState& state, const ProblemSpec& spec, const RefineConfig& cfg,
                          const UnitEvaluator& evaluate, Rng& rng, bool allow_overrun = false);

/// Next point to evaluate, or empty once stop_reason is set. Steps that round
/// back onto x_bar are applied without an evaluation.
std::optional<RefineProposal> refine_propose(RefinementState& state, const ProblemSpec& spec, const RefineConfig& cfg,
                                             Rng& rng, bool allow_overrun = false);
/// Feeds back the value of the last proposal.
void refine_accept(RefinementState& state, const RefineProposal& prop, double f, const RefineConfig& cfg,
                   bool allow_overrun = false);

/// Probabilistic rounding of a fractional unit extended point; among `trials`
/// draws the one with the lowest c^T reduce(x) is kept.
Eigen::VectorXd round_point(const Eigen::VectorXd& unit, const ProblemSpec& spec, const Eigen::VectorXd& c, int trials,
                            Rng& rng);

bool should_trigger(int cycles_since_last, bool improved_since_last, bool last_stop_was_iteration_limit,
                    const RefineConfig& cfg);

struct RefineOutcome {
  std::optional<RefineStop> stop;  ///< empty when refinement was skipped
  bool improved = false;
  double f_bar = 0.0;
};

/// Runs a full refinement step. `remaining` reports the evaluations left.
RefineOutcome run_refinement(const Eigen::MatrixXd& unit_nodes, const Eigen::VectorXd& values, const ProblemSpec& spec,
                             const RefineConfig& cfg, const UnitEvaluator& evaluate,
                             const std::function<int()>& remaining, Rng& rng);

}  // namespace rbfmix

#pragma once

#include <optional>

#include <Eigen/Core>

#include "rbfmix/problem.hpp"
#include "rbfmix/rbf.hpp"
#include "rbfmix/subsolver.hpp"

namespace rbfmix {

class SearchError : public Error {
 public:
  using Error::Error;
};

enum class Algorithm { Msrsm, Gutmann };

enum class MsrsmVariant { UnitSecondTerm, OneMinusAlpha };

inline constexpr int kInfStep = -1;

/// Position in the search cycle: -1 is InfStep, 0..kappa-1 the global
/// steps, kappa the local step.
struct CycleState {
  int kappa = 5;
  int step = 0;
  bool infstep_enabled = false;

  static CycleState start(int kappa, bool infstep);
  int first_step() const { return infstep_enabled ? kInfStep : 0; }
  bool at_cycle_start() const { return step == first_step(); }
  bool is_local() const { return step == kappa; }
  /// Moves to the next step; returns true when a new cycle begins.
  bool advance();
  /// Steps served by the local-search model: the local step and global step kappa-1.
  bool uses_local_model() const { return step == kappa || step == kappa - 1; }
};

/// Target value f*: -inf at InfStep, s(y*) - (1 - l/kappa)^2 (f_max - s(y*))
/// at global step l, s(y*) at the local step.
double gutmann_target(int step, int kappa, double s_ystar, double f_max);

/// h = 1 / ((-1)^{d+1} mu (s - f*)^2); 0 when mu is absent (point at a node).
double gutmann_h(double f_star, std::optional<double> mu, double s_value, int degree);

/// +inf at InfStep, max{1 - (l+1)/kappa, 0.05} at global step l, 0 at the local step.
double msrsm_weight(int step, int kappa);

/// Weighted distance/surrogate score of each candidate, normalized over the
/// candidate set itself. `dist` is the min distance to the nodes. alpha = inf
/// gives -dist.
Eigen::VectorXd msrsm_scores(const Eigen::VectorXd& dist, const Eigen::VectorXd& s_values, double alpha,
                             MsrsmVariant variant = MsrsmVariant::UnitSecondTerm);

/// Score of a single point against reference set statistics.
double msrsm_score(double dist, double s_value, const Eigen::VectorXd& ref_dist, const Eigen::VectorXd& ref_s,
                   double alpha, MsrsmVariant variant = MsrsmVariant::UnitSecondTerm);

struct SearchInput {
  const ProblemSpec* spec = nullptr;
  const Interpolant* model = nullptr;
  /// Every known point (unit coordinates), including ones excluded from the model.
  const Eigen::MatrixXd* all_nodes = nullptr;
  double f_min = 0.0;
  double f_max = 0.0;
  MsrsmVariant variant = MsrsmVariant::UnitSecondTerm;
  double min_node_distance = 1e-10;
};

struct Proposal {
  Eigen::VectorXd point;  ///< unit coordinates
  bool shortcut = false;  ///< y* accepted directly at the local step
  std::optional<double> s_ystar;
  double surrogate_value = 0.0;
};

/// Minimizes the surrogate with the subsolver.
SubsolverResult minimize_surrogate(const Interpolant& model, const ProblemSpec& spec, const SubsolverConfig& sub,
                                   Rng& rng);

Proposal next_point(Algorithm algorithm, const CycleState& state, const SearchInput& in, const SubsolverConfig& sub,
                    Rng& rng);

}  // namespace rbfmix

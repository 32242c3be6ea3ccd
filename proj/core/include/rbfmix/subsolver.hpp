#pragma once

#include <functional>

#include <Eigen/Core>

#include "rbfmix/problem.hpp"

namespace rbfmix {

/// Scores a batch of candidates given as rows of unit coordinates. Lower is
/// better; the batch is also the normalization set for relative scores.
using BatchObjective = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct GaConfig {
  int base_population = 400;
  int iterations = 20;

  static GaConfig intensive() { return {5000, 40}; }
  int population(int n) const { return base_population + n / 5; }
};

struct SamplingConfig {
  int samples_per_dimension = 1000;

  static SamplingConfig intensive() { return {3000}; }
};

struct SubsolverResult {
  Eigen::VectorXd best;  ///< unit coordinates
  double value = 0.0;
  /// Last population (GA) or full sample (sampling), with matching scores.
  Eigen::MatrixXd population;
  Eigen::VectorXd scores;
};

/// `count` points drawn uniformly in the original space, returned as rows of
/// unit extended coordinates.
Eigen::MatrixXd sample_unit(const ProblemSpec& spec, int count, Rng& rng);

/// Sizes of the survivor / offspring / mutant / random groups for |X| = size.
struct GaSplit {
  int survivors = 0;
  int offspring = 0;
  int mutants = 0;
  int random = 0;
};
GaSplit ga_split(int size);

Eigen::MatrixXd ga_next_population(const Eigen::MatrixXd& current, const Eigen::VectorXd& scores,
                                   const ProblemSpec& spec, int mutation_age, Rng& rng);

SubsolverResult ga_minimize(const BatchObjective& objective, const ProblemSpec& spec, const GaConfig& cfg, Rng& rng);

SubsolverResult sample_minimize(const BatchObjective& objective, const ProblemSpec& spec, const SamplingConfig& cfg,
                                Rng& rng);

enum class SubsolverKind { Ga, Sampling };

struct SubsolverConfig {
  SubsolverKind kind = SubsolverKind::Ga;
  GaConfig ga;
  SamplingConfig sampling;

  static SubsolverConfig make(SubsolverKind kind, bool intensive);
};

SubsolverResult minimize(const BatchObjective& objective, const ProblemSpec& spec, const SubsolverConfig& cfg,
                         Rng& rng);

}  // namespace rbfmix

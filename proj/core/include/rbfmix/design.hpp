#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/problem.hpp"
#include "rbfmix/rbf.hpp"

namespace rbfmix {

class DesignError : public Error {
 public:
  using Error::Error;
};

struct InitConfig {
  int threads = 1;
  int candidates = 50;
  int max_regeneration_attempts = 20;
};

/// Number of initial samples for an n-dimensional (extended) space.
int initial_sample_count(int n, int threads);

/// One random latin hypercube of `count` points.
std::vector<ExtendedPoint> random_latin_hypercube(const ProblemSpec& spec, int count, Rng& rng);

/// Best of `candidates` random latin hypercubes by minimum pairwise distance
/// (measured in unit coordinates).
std::vector<ExtendedPoint> latin_hypercube(const ProblemSpec& spec, int count, Rng& rng, int candidates = 50);

double min_pairwise_distance(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec);

/// Rank test on rows (x_i, 1) of the unit-scaled nodes with eliminated
/// columns removed.
bool affine_rank_ok(const Eigen::MatrixXd& unit_nodes, std::span<const int> eliminated, double threshold = 1e-6);
/// Always true unless `kind` has a degree-1 tail.
bool affine_rank_ok(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec, const RbfKind& kind);

/// Maximin latin hypercube with distinct points that passes the rank test,
/// regenerated up to max_regeneration_attempts times. Throws DesignError.
std::vector<ExtendedPoint> initial_design(const ProblemSpec& spec, int count, const RbfKind& kind,
                                          const InitConfig& cfg, Rng& rng);

/// Rows of unit coordinates for a list of points.
Eigen::MatrixXd to_unit_rows(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec);

}  // namespace rbfmix

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/rbf.hpp"

namespace rbfmix {

/// 1-based position at which `value` is inserted into the ascending list
/// `sorted` (leftmost slot among ties).
int insertion_order(std::span<const double> sorted, double value);

/// q_{k,j} for 1-based fold j. Nodes and values must be sorted by value.
/// Empty when the leave-one-out fit fails.
std::optional<int> loo_rank_error(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values_sorted,
                                  int j, std::span<const int> eliminated);

struct CvScores {
  double q10 = 0.0;
  double q70 = 0.0;
  int folds10 = 0;
  int folds70 = 0;
};

/// Mean q over folds 1..floor(0.1k) and 1..floor(0.7k). Nodes need not be
/// sorted. Empty when k < 10, when the full system cannot be solved, or when
/// every fold in a range fails.
std::optional<CvScores> cv_scores(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                                  std::span<const int> eliminated);

struct ModelSelState {
  int t_mcv = 20;
  int executions = 0;
  std::array<int, 5> wins_local{};
  std::array<int, 5> wins_global{};
  bool frozen = false;
  RbfKind current_local = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
  RbfKind current_global = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
};

struct ModelChoice {
  RbfKind local;
  RbfKind global;
};

/// Picks the local (best q10) and global (best q70) kernels; after t_mcv
/// executions the modal winners are frozen.
ModelChoice choose_models(ModelSelState& state, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                          std::span<const int> eliminated);

}  // namespace rbfmix

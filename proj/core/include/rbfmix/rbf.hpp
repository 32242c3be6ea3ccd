#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/problem.hpp"

namespace rbfmix {

/// Kernel families, in the order used for tie-breaking during model selection.
enum class RbfKernel { Linear, Cubic, Multiquadric, ThinPlateSpline, Gaussian };

inline constexpr std::array<RbfKernel, 5> kAllKernels = {
    RbfKernel::Linear, RbfKernel::Cubic, RbfKernel::Multiquadric, RbfKernel::ThinPlateSpline,
    RbfKernel::Gaussian};

std::string_view kernel_name(RbfKernel k);
std::optional<RbfKernel> parse_kernel(std::string_view name);

/// Polynomial tail degree: 0 for linear and multiquadric, 1 for cubic and
/// thin plate spline, -1 (no tail) for Gaussian.
int tail_degree(RbfKernel k);

struct RbfKind {
  RbfKernel kernel = RbfKernel::ThinPlateSpline;
  /// Shape parameter; only multiquadric and Gaussian read it.
  double gamma = 0.0;

  static RbfKind with_default_shape(RbfKernel k);
  int degree() const { return tail_degree(kernel); }
  bool operator==(const RbfKind&) const = default;
};

class UnsolvableSystemError : public Error {
 public:
  using Error::Error;
};

class DuplicateNodeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteValueError : public Error {
 public:
  using Error::Error;
};

/// phi(r). Thin plate spline returns its limit 0 at r = 0.
double kernel_eval(const RbfKind& kind, double r);

/// Applies phi in place to an array of squared distances.
void apply_kernel_squared(const RbfKind& kind, Eigen::Ref<Eigen::ArrayXXd> r2);

/// Squared distances between the rows of `points` (P x n) and the rows of
/// `nodes` (k x n), computed from coordinate differences.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& nodes);

/// Minimum Euclidean distance from each row of `points` to any row of `nodes`
/// (+inf when `nodes` is empty).
Eigen::VectorXd min_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& nodes);

struct LinearSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  /// Tail columns (extended-space slots) dropped from the affine part.
  std::vector<int> eliminated_columns;
  /// Extended-space slots that keep a tail column, in matrix order.
  std::vector<int> tail_columns;
};

/// Builds [[Phi, P], [P^T, 0]] (lambda; alpha) = (F; 0). With a degree-1 tail
/// the columns listed in `eliminated` are removed from P.
LinearSystem assemble_system(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                             std::span<const int> eliminated);
LinearSystem assemble_system(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                             const ProblemSpec& spec);

enum class FitMethod { Direct, LeastSquares };

struct FitOptions {
  double condition_limit = 1e12;
  double direct_residual_tol = 1e-6;
  double lsq_residual_tol = 1e-3;
  double min_node_distance = 1e-10;
};

/// Fitted RBF surrogate s(x) = sum_i lambda_i phi(|x - x_i|) + alpha^T (x, 1).
class Interpolant {
 public:
  Interpolant() = default;
  Interpolant(RbfKind kind, Eigen::MatrixXd nodes, Eigen::VectorXd values, Eigen::VectorXd lambda,
              Eigen::VectorXd alpha, FitMethod method, std::vector<int> eliminated);

  const RbfKind& kind() const { return kind_; }
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  /// Full-length tail: n linear coefficients then the constant (length n+1
  /// for degree 1, 1 for degree 0, empty for degree -1). Entries at
  /// eliminated columns are zero.
  const Eigen::VectorXd& alpha() const { return alpha_; }
  FitMethod fit_method() const { return method_; }
  const std::vector<int>& eliminated_columns() const { return eliminated_; }
  Eigen::Index dim() const { return nodes_.cols(); }

  double predict(const Eigen::VectorXd& x) const;
  /// Predictions for each row of `points`.
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& points) const;
  /// Same as predict_batch, reusing precomputed squared distances to the nodes.
  Eigen::VectorXd predict_from_squared(const Eigen::MatrixXd& points, Eigen::MatrixXd sq_dist) const;

 private:
  RbfKind kind_;
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd values_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd alpha_;
  FitMethod method_ = FitMethod::Direct;
  std::vector<int> eliminated_;
};

/// Solves the (reduced) interpolation system: direct LU when the matrix is
/// well conditioned, minimum-norm least squares otherwise.
Interpolant fit(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                std::span<const int> eliminated, const FitOptions& opts = {});
Interpolant fit(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                const ProblemSpec& spec, const FitOptions& opts = {});

/// Max-abs residual of the full, unreduced system for the model's coefficients.
double full_system_residual(const Interpolant& model);

/// True when the reduced system for `nodes` is square with a condition
/// estimate below `condition_limit`.
bool system_invertible(const RbfKind& kind, const Eigen::MatrixXd& nodes, std::span<const int> eliminated,
                       double condition_limit = 1e12);

/// Caps values above the median at the median when max(F)/|median| exceeds
/// `dynamism`.
Eigen::VectorXd clip_values(const Eigen::VectorXd& values, double dynamism = 1e3);

/// Coefficient at y of the interpolant to nodes + {y} with values (0,...,0,1).
/// Empty when y lies on a node.
std::optional<double> bumpiness_mu(const Eigen::MatrixXd& nodes, const RbfKind& kind, const Eigen::VectorXd& y,
                                   std::span<const int> eliminated, double min_node_distance = 1e-10);

/// Batched mu via the Schur complement of the node system:
/// mu(y) = 1 / (phi(0) - u(y)^T A^{-1} u(y)). Points where the denominator
/// loses its sign or most of its digits are solved directly instead.
class BumpinessEvaluator {
 public:
  BumpinessEvaluator(const RbfKind& kind, const Eigen::MatrixXd& nodes, std::span<const int> eliminated);

  /// mu for each row of `points`; NaN for rows within `min_node_distance` of a node.
  Eigen::VectorXd mu_batch(const Eigen::MatrixXd& points, double min_node_distance = 1e-10) const;

 private:
  RbfKind kind_;
  Eigen::MatrixXd nodes_;
  std::vector<int> eliminated_;
  std::vector<int> tail_columns_;
  int tail_size_ = 0;
  Eigen::MatrixXd inverse_;
};

}  // namespace rbfmix

#include "rbfmix/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>

namespace rbfmix {

std::string_view kernel_name(RbfKernel k) {
  switch (k) {
    case RbfKernel::Linear: return "linear";
    case RbfKernel::Cubic: return "cubic";
    case RbfKernel::Multiquadric: return "multiquadric";
    case RbfKernel::ThinPlateSpline: return "thin_plate_spline";
    case RbfKernel::Gaussian: return "gaussian";
  }
  return "unknown";
}

std::optional<RbfKernel> parse_kernel(std::string_view name) {
  if (name == "linear") return RbfKernel::Linear;
  if (name == "cubic") return RbfKernel::Cubic;
  if (name == "multiquadric") return RbfKernel::Multiquadric;
  if (name == "thin_plate_spline" || name == "thin_plate") return RbfKernel::ThinPlateSpline;
  if (name == "gaussian") return RbfKernel::Gaussian;
  return std::nullopt;
}

int tail_degree(RbfKernel k) {
  switch (k) {
    case RbfKernel::Linear: return 0;
    case RbfKernel::Cubic: return 1;
    case RbfKernel::Multiquadric: return 0;
    case RbfKernel::ThinPlateSpline: return 1;
    case RbfKernel::Gaussian: return -1;
  }
  return -1;
}

RbfKind RbfKind::with_default_shape(RbfKernel k) {
  switch (k) {
    case RbfKernel::Multiquadric: return {k, 0.1};
    case RbfKernel::Gaussian: return {k, 1.0};
    default: return {k, 0.0};
  }
}

double kernel_eval(const RbfKind& kind, double r) {
  if (!(r >= 0.0)) throw Error("kernel_eval: distance must be nonnegative");
  switch (kind.kernel) {
    case RbfKernel::Linear: return r;
    case RbfKernel::Cubic: return r * r * r;
    case RbfKernel::Multiquadric: return std::sqrt(r * r + kind.gamma * kind.gamma);
    case RbfKernel::ThinPlateSpline: return r > 0.0 ? r * r * std::log(r) : 0.0;
    case RbfKernel::Gaussian: return std::exp(-kind.gamma * r * r);
  }
  return 0.0;
}

void apply_kernel_squared(const RbfKind& kind, Eigen::Ref<Eigen::ArrayXXd> r2) {
  switch (kind.kernel) {
    case RbfKernel::Linear: r2 = r2.sqrt(); break;
    case RbfKernel::Cubic: r2 = r2 * r2.sqrt(); break;
    case RbfKernel::Multiquadric: r2 = (r2 + kind.gamma * kind.gamma).sqrt(); break;
    case RbfKernel::ThinPlateSpline:
      // r^2 log r = r^2 log(r^2) / 2, with the r = 0 limit set explicitly.
      r2 = (r2 > 0.0).select(0.5 * r2 * r2.max(std::numeric_limits<double>::min()).log(), 0.0);
      break;
    case RbfKernel::Gaussian: r2 = (-kind.gamma * r2).exp(); break;
  }
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& nodes) {
  if (points.cols() != nodes.cols() && nodes.rows() > 0) {
    throw DimensionMismatchError("squared_distances: dimension mismatch");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(points.rows(), nodes.rows());
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    auto col = d.col(i).array();
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      col += (points.col(j).array() - nodes(i, j)).square();
    }
  }
  return d;
}

Eigen::VectorXd min_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& nodes) {
  if (nodes.rows() == 0) {
    return Eigen::VectorXd::Constant(points.rows(), std::numeric_limits<double>::infinity());
  }
  return squared_distances(points, nodes).rowwise().minCoeff().cwiseSqrt();
}

namespace {

std::vector<int> kept_tail_columns(int degree, Eigen::Index n, std::span<const int> eliminated) {
  std::vector<int> cols;
  if (degree < 1) return cols;
  for (int j = 0; j < static_cast<int>(n); ++j) {
    if (std::find(eliminated.begin(), eliminated.end(), j) == eliminated.end()) cols.push_back(j);
  }
  return cols;
}

int tail_size(int degree, const std::vector<int>& tail_cols) {
  if (degree < 0) return 0;
  if (degree == 0) return 1;
  return static_cast<int>(tail_cols.size()) + 1;
}

// Tail block rows (x_kept, 1) for each row of `points`.
Eigen::MatrixXd tail_block(int degree, const Eigen::MatrixXd& points, const std::vector<int>& tail_cols) {
  const int t = tail_size(degree, tail_cols);
  Eigen::MatrixXd p(points.rows(), t);
  for (std::size_t c = 0; c < tail_cols.size(); ++c) p.col(static_cast<Eigen::Index>(c)) = points.col(tail_cols[c]);
  if (t > 0) p.col(t - 1).setOnes();
  return p;
}

void check_distinct(const Eigen::MatrixXd& nodes, double min_dist) {
  const double min_sq = min_dist * min_dist;
  for (Eigen::Index i = 1; i < nodes.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if ((nodes.row(i) - nodes.row(j)).squaredNorm() <= min_sq) {
        throw DuplicateNodeError("interpolation nodes " + std::to_string(j) + " and " + std::to_string(i) +
                                 " coincide");
      }
    }
  }
}

struct Solution {
  Eigen::VectorXd x;
  FitMethod method;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Solution solve_system(const LinearSystem& sys, double scale, const FitOptions& opts) {
  const Eigen::MatrixXd& a = sys.matrix;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rcond() > 1.0 / opts.condition_limit) {
    Eigen::VectorXd x = lu.solve(sys.rhs);
    if (x.allFinite() && max_abs(a * x - sys.rhs) <= opts.direct_residual_tol * scale) {
      return {std::move(x), FitMethod::Direct};
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Eigen::VectorXd x = cod.solve(sys.rhs);
  // Corrections from cod.solve lie in the row space, so x stays minimum-norm.
  for (int step = 0; step < 2 && x.allFinite(); ++step) {
    const Eigen::VectorXd r = sys.rhs - a * x;
    const Eigen::VectorXd y = x + cod.solve(r);
    if (!y.allFinite() || max_abs(sys.rhs - a * y) >= max_abs(r)) break;
    x = y;
  }
  if (!x.allFinite() || max_abs(a * x - sys.rhs) > opts.lsq_residual_tol * scale) {
    throw UnsolvableSystemError("interpolation system cannot be solved, even in the least-squares sense");
  }
  return {std::move(x), FitMethod::LeastSquares};
}

}  // namespace

LinearSystem assemble_system(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                             std::span<const int> eliminated) {
  const Eigen::Index k = nodes.rows();
  if (values.size() != k) throw DimensionMismatchError("assemble_system: values/nodes size mismatch");
  check_distinct(nodes, 1e-10);
  const int degree = kind.degree();
  LinearSystem sys;
  sys.tail_columns = kept_tail_columns(degree, nodes.cols(), eliminated);
  if (degree == 1) sys.eliminated_columns.assign(eliminated.begin(), eliminated.end());
  const int t = tail_size(degree, sys.tail_columns);

  Eigen::MatrixXd phi = squared_distances(nodes, nodes);
  apply_kernel_squared(kind, phi.array());
  sys.matrix = Eigen::MatrixXd::Zero(k + t, k + t);
  sys.matrix.topLeftCorner(k, k) = phi;
  if (t > 0) {
    const Eigen::MatrixXd p = tail_block(degree, nodes, sys.tail_columns);
    sys.matrix.topRightCorner(k, t) = p;
    sys.matrix.bottomLeftCorner(t, k) = p.transpose();
  }
  sys.rhs = Eigen::VectorXd::Zero(k + t);
  sys.rhs.head(k) = values;
  return sys;
}

LinearSystem assemble_system(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                             const ProblemSpec& spec) {
  return assemble_system(kind, nodes, values, spec.eliminated_columns());
}

Interpolant::Interpolant(RbfKind kind, Eigen::MatrixXd nodes, Eigen::VectorXd values, Eigen::VectorXd lambda,
                         Eigen::VectorXd alpha, FitMethod method, std::vector<int> eliminated)
    : kind_(kind),
      nodes_(std::move(nodes)),
      values_(std::move(values)),
      lambda_(std::move(lambda)),
      alpha_(std::move(alpha)),
      method_(method),
      eliminated_(std::move(eliminated)) {}

double Interpolant::predict(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd row = x.transpose();
  return predict_batch(row)[0];
}

Eigen::VectorXd Interpolant::predict_batch(const Eigen::MatrixXd& points) const {
  return predict_from_squared(points, squared_distances(points, nodes_));
}

Eigen::VectorXd Interpolant::predict_from_squared(const Eigen::MatrixXd& points, Eigen::MatrixXd sq_dist) const {
  if (points.cols() != dim()) throw DimensionMismatchError("predict: dimension mismatch");
  apply_kernel_squared(kind_, sq_dist.array());
  Eigen::VectorXd s = sq_dist * lambda_;
  const int degree = kind_.degree();
  if (degree == 0) {
    s.array() += alpha_[0];
  } else if (degree == 1) {
    s += points * alpha_.head(dim());
    s.array() += alpha_[dim()];
  }
  return s;
}

Interpolant fit(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                std::span<const int> eliminated, const FitOptions& opts) {
  if (nodes.rows() < 1) throw Error("fit: need at least one node");
  if (!values.allFinite()) throw NonFiniteValueError("fit: function values must be finite");
  check_distinct(nodes, opts.min_node_distance);
  const LinearSystem sys = assemble_system(kind, nodes, values, eliminated);
  const double scale = std::max(1.0, max_abs(values));
  Solution sol = solve_system(sys, scale, opts);

  const Eigen::Index k = nodes.rows();
  const Eigen::Index n = nodes.cols();
  Eigen::VectorXd lambda = sol.x.head(k);
  Eigen::VectorXd alpha;
  const int degree = kind.degree();
  if (degree == 0) {
    alpha = sol.x.tail(1);
  } else if (degree == 1) {
    alpha = Eigen::VectorXd::Zero(n + 1);
    for (std::size_t c = 0; c < sys.tail_columns.size(); ++c) {
      alpha[sys.tail_columns[c]] = sol.x[k + static_cast<Eigen::Index>(c)];
    }
    alpha[n] = sol.x[sol.x.size() - 1];
  }
  return Interpolant(kind, nodes, values, std::move(lambda), std::move(alpha), sol.method,
                     degree == 1 ? sys.eliminated_columns : std::vector<int>{});
}

Interpolant fit(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                const ProblemSpec& spec, const FitOptions& opts) {
  return fit(kind, nodes, values, spec.eliminated_columns(), opts);
}

double full_system_residual(const Interpolant& model) {
  const LinearSystem full = assemble_system(model.kind(), model.nodes(), model.values(), std::span<const int>{});
  Eigen::VectorXd coeffs(full.matrix.cols());
  coeffs.head(model.nodes().rows()) = model.lambda();
  if (model.alpha().size() > 0) coeffs.tail(model.alpha().size()) = model.alpha();
  return max_abs(full.matrix * coeffs - full.rhs);
}

bool system_invertible(const RbfKind& kind, const Eigen::MatrixXd& nodes, std::span<const int> eliminated,
                       double condition_limit) {
  try {
    const LinearSystem sys = assemble_system(kind, nodes, Eigen::VectorXd::Zero(nodes.rows()), eliminated);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
    return lu.rcond() > 1.0 / condition_limit;
  } catch (const DuplicateNodeError&) {
    return false;
  }
}

Eigen::VectorXd clip_values(const Eigen::VectorXd& values, double dynamism) {
  if (values.size() < 2) return values;
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  const double max = sorted.back();
  const bool wide = median == 0.0 ? max > 0.0 : max / std::abs(median) > dynamism;
  if (!wide) return values;
  return values.cwiseMin(median);
}

std::optional<double> bumpiness_mu(const Eigen::MatrixXd& nodes, const RbfKind& kind, const Eigen::VectorXd& y,
                                   std::span<const int> eliminated, double min_node_distance) {
  if (nodes.rows() < 1) throw Error("bumpiness_mu: need at least one node");
  if ((nodes.rowwise() - y.transpose()).rowwise().norm().minCoeff() <= min_node_distance) return std::nullopt;
  const Eigen::Index k = nodes.rows();
  Eigen::MatrixXd augmented(k + 1, nodes.cols());
  augmented.topRows(k) = nodes;
  augmented.row(k) = y.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  const LinearSystem sys = assemble_system(kind, augmented, rhs, eliminated);
  FitOptions opts;
  opts.lsq_residual_tol = std::numeric_limits<double>::infinity();
  const Solution sol = solve_system(sys, 1.0, opts);
  return sol.x[k];
}

BumpinessEvaluator::BumpinessEvaluator(const RbfKind& kind, const Eigen::MatrixXd& nodes,
                                       std::span<const int> eliminated)
    : kind_(kind), nodes_(nodes), eliminated_(eliminated.begin(), eliminated.end()) {
  const LinearSystem sys = assemble_system(kind, nodes, Eigen::VectorXd::Zero(nodes.rows()), eliminated);
  tail_columns_ = sys.tail_columns;
  tail_size_ = tail_size(kind.degree(), tail_columns_);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
  if (lu.rcond() > 1e-12) {
    inverse_ = lu.inverse();
  } else {
    inverse_ = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(sys.matrix).pseudoInverse();
  }
}

Eigen::VectorXd BumpinessEvaluator::mu_batch(const Eigen::MatrixXd& points, double min_node_distance) const {
  const Eigen::Index k = nodes_.rows();
  Eigen::MatrixXd sq = squared_distances(points, nodes_);
  const Eigen::VectorXd min_sq = sq.rowwise().minCoeff();
  apply_kernel_squared(kind_, sq.array());
  // u stacked as columns: (phi(|y - x_i|)_i, tail(y)).
  Eigen::MatrixXd u(k + tail_size_, points.rows());
  u.topRows(k) = sq.transpose();
  if (tail_size_ > 0) u.bottomRows(tail_size_) = tail_block(kind_.degree(), points, tail_columns_).transpose();
  const Eigen::MatrixXd w = inverse_ * u;
  const double phi0 = kernel_eval(kind_, 0.0);
  const double sign = kind_.degree() % 2 == 0 ? -1.0 : 1.0;
  Eigen::VectorXd mu(points.rows());
  const double min_sq_allowed = min_node_distance * min_node_distance;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    if (min_sq[p] <= min_sq_allowed) {
      mu[p] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double quad = u.col(p).dot(w.col(p));
    const double den = phi0 - quad;
    if (sign * den > 0.0 && std::abs(den) > 1e-8 * (std::abs(phi0) + std::abs(quad))) {
      mu[p] = 1.0 / den;
    } else {
      mu[p] = bumpiness_mu(nodes_, kind_, points.row(p).transpose(), eliminated_, min_node_distance).value();
    }
  }
  return mu;
}

}  // namespace rbfmix

#include "rbfmix/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <Eigen/LU>

namespace rbfmix {

int insertion_order(std::span<const double> sorted, double value) {
  return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin()) + 1;
}

std::optional<int> loo_rank_error(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values_sorted,
                                  int j, std::span<const int> eliminated) {
  const Eigen::Index k = nodes.rows();
  if (j < 1 || j > k) throw Error("loo_rank_error: fold index out of range");
  Eigen::MatrixXd rest(k - 1, nodes.cols());
  Eigen::VectorXd rest_values(k - 1);
  std::vector<double> remaining;
  remaining.reserve(static_cast<std::size_t>(k - 1));
  for (Eigen::Index i = 0, r = 0; i < k; ++i) {
    if (i == j - 1) continue;
    rest.row(r) = nodes.row(i);
    rest_values[r++] = values_sorted[i];
    remaining.push_back(values_sorted[i]);
  }
  double predicted = 0.0;
  try {
    const Interpolant model = fit(kind, rest, rest_values, eliminated);
    predicted = model.predict(nodes.row(j - 1).transpose());
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!std::isfinite(predicted)) return std::nullopt;
  return std::abs(insertion_order(remaining, predicted) - j);
}

namespace {

// Leave-one-out predictions at the first `count` nodes from one factorization:
// the fold without node j predicts f_j - c_j / (M^-1)_jj. Empty when the full
// system is too ill-conditioned for this to match refitting each fold.
std::optional<std::vector<std::optional<double>>> fast_loo(const RbfKind& kind, const Eigen::MatrixXd& nodes,
                                                           const Eigen::VectorXd& values, int count,
                                                           std::span<const int> eliminated) {
  const LinearSystem sys = assemble_system(kind, nodes, values, eliminated);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
  if (!(lu.rcond() > 1e-10)) return std::nullopt;
  const Eigen::MatrixXd inv = lu.inverse();
  const Eigen::VectorXd c = inv * sys.rhs;
  std::vector<std::optional<double>> out(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const double d = inv(j, j);
    if (d == 0.0) continue;
    const double p = values[j] - c[j] / d;
    if (std::isfinite(p)) out[static_cast<std::size_t>(j)] = p;
  }
  return out;
}

}  // namespace

std::optional<CvScores> cv_scores(const RbfKind& kind, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                                  std::span<const int> eliminated) {
  const Eigen::Index k = nodes.rows();
  if (k < 10) return std::nullopt;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Eigen::MatrixXd sorted_nodes(k, nodes.cols());
  Eigen::VectorXd sorted_values(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    sorted_nodes.row(i) = nodes.row(order[static_cast<std::size_t>(i)]);
    sorted_values[i] = values[order[static_cast<std::size_t>(i)]];
  }
  const int n10 = static_cast<int>(k / 10);
  const int n70 = static_cast<int>(7 * k / 10);
  CvScores cv;
  double sum10 = 0.0;
  double sum70 = 0.0;
  std::optional<std::vector<std::optional<double>>> fast;
  try {
    fast = fast_loo(kind, sorted_nodes, sorted_values, n70, eliminated);
  } catch (const Error&) {
  }
  if (!fast) {
    // A kernel that cannot interpolate the full node set is not a candidate.
    try {
      fit(kind, sorted_nodes, sorted_values, eliminated);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  std::vector<double> remaining(static_cast<std::size_t>(k - 1));
  for (int j = 1; j <= n70; ++j) {
    std::optional<int> q;
    if (fast) {
      const auto& p = (*fast)[static_cast<std::size_t>(j - 1)];
      if (p) {
        for (Eigen::Index i = 0, r = 0; i < k; ++i) {
          if (i != j - 1) remaining[static_cast<std::size_t>(r++)] = sorted_values[i];
        }
        q = std::abs(insertion_order(remaining, *p) - j);
      }
    } else {
      q = loo_rank_error(kind, sorted_nodes, sorted_values, j, eliminated);
    }
    if (!q) continue;
    sum70 += *q;
    ++cv.folds70;
    if (j <= n10) {
      sum10 += *q;
      ++cv.folds10;
    }
  }
  if (cv.folds10 == 0 || cv.folds70 == 0) return std::nullopt;
  cv.q10 = sum10 / cv.folds10;
  cv.q70 = sum70 / cv.folds70;
  return cv;
}

namespace {

std::size_t modal(const std::array<int, 5>& wins) {
  return static_cast<std::size_t>(std::max_element(wins.begin(), wins.end()) - wins.begin());
}

}  // namespace

ModelChoice choose_models(ModelSelState& state, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& values,
                          std::span<const int> eliminated) {
  if (state.frozen || nodes.rows() < 10) return {state.current_local, state.current_global};
  std::optional<std::size_t> best10;
  std::optional<std::size_t> best70;
  double q10 = 0.0;
  double q70 = 0.0;
  for (std::size_t i = 0; i < kAllKernels.size(); ++i) {
    const auto cv = cv_scores(RbfKind::with_default_shape(kAllKernels[i]), nodes, values, eliminated);
    if (!cv) continue;
    if (!best10 || cv->q10 < q10) {
      best10 = i;
      q10 = cv->q10;
    }
    if (!best70 || cv->q70 < q70) {
      best70 = i;
      q70 = cv->q70;
    }
  }
  if (!best10 || !best70) return {state.current_local, state.current_global};
  ++state.wins_local[*best10];
  ++state.wins_global[*best70];
  ++state.executions;
  state.current_local = RbfKind::with_default_shape(kAllKernels[*best10]);
  state.current_global = RbfKind::with_default_shape(kAllKernels[*best70]);
  if (state.executions >= state.t_mcv) {
    state.frozen = true;
    state.current_local = RbfKind::with_default_shape(kAllKernels[modal(state.wins_local)]);
    state.current_global = RbfKind::with_default_shape(kAllKernels[modal(state.wins_global)]);
  }
  return {state.current_local, state.current_global};
}

}  // namespace rbfmix

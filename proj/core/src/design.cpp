#include "rbfmix/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

namespace rbfmix {

int initial_sample_count(int n, int threads) {
  if (n < 1 || threads < 1) throw Error("initial_sample_count: n and threads must be positive");
  const double m = n + 1.0;
  if (threads == 1) return static_cast<int>(std::lround(n <= 20 ? 0.5 * m : 0.4 * m));
  if (n <= 20) return n + 1;
  if (n <= 50) return static_cast<int>(std::lround(0.75 * m));
  return static_cast<int>(std::lround(0.5 * m));
}

std::vector<ExtendedPoint> random_latin_hypercube(const ProblemSpec& spec, int count, Rng& rng) {
  if (count < 1) throw Error("latin_hypercube: count must be positive");
  const int dim = spec.original_dim();
  const int nb = spec.n_continuous() + spec.n_integer();
  Eigen::MatrixXd pts(count, dim);
  std::vector<int> perm(static_cast<std::size_t>(count));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < count; ++i) {
      const double u = unif(rng);
      const double cell = perm[static_cast<std::size_t>(i)] + u;
      if (j < spec.n_continuous()) {
        const Bounds& b = spec.bounds(j);
        pts(i, j) = b.lower + cell / count * (b.upper - b.lower);
      } else if (j < nb) {
        const Bounds& b = spec.bounds(j);
        const double values = b.upper - b.lower + 1.0;
        pts(i, j) = std::min(b.upper, b.lower + std::floor(cell * values / count));
      } else {
        const int m = spec.category_count(j - nb);
        pts(i, j) = std::min<double>(m, 1.0 + std::floor(cell * m / count));
      }
    }
  }
  std::vector<ExtendedPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(encode(OriginalPoint(Eigen::VectorXd(pts.row(i).transpose())), spec));
  return out;
}

Eigen::MatrixXd to_unit_rows(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(points.size()), spec.extended_dim());
  for (std::size_t i = 0; i < points.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = spec.to_unit(points[i]);
  return rows;
}

double min_pairwise_distance(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec) {
  if (points.size() < 2) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = squared_distances(to_unit_rows(points, spec), to_unit_rows(points, spec));
  d.diagonal().setConstant(std::numeric_limits<double>::infinity());
  return std::sqrt(d.minCoeff());
}

std::vector<ExtendedPoint> latin_hypercube(const ProblemSpec& spec, int count, Rng& rng, int candidates) {
  std::vector<ExtendedPoint> best;
  double best_dist = -1.0;
  for (int r = 0; r < std::max(1, candidates); ++r) {
    auto design = random_latin_hypercube(spec, count, rng);
    const double d = min_pairwise_distance(design, spec);
    if (d > best_dist) {
      best_dist = d;
      best = std::move(design);
    }
  }
  return best;
}

bool affine_rank_ok(const Eigen::MatrixXd& unit_nodes, std::span<const int> eliminated, double threshold) {
  if (unit_nodes.rows() == 0) return false;
  std::vector<int> keep;
  for (int j = 0; j < unit_nodes.cols(); ++j) {
    if (std::find(eliminated.begin(), eliminated.end(), j) == eliminated.end()) keep.push_back(j);
  }
  Eigen::MatrixXd p(unit_nodes.rows(), static_cast<Eigen::Index>(keep.size()) + 1);
  for (std::size_t c = 0; c < keep.size(); ++c) p.col(static_cast<Eigen::Index>(c)) = unit_nodes.col(keep[c]);
  p.col(p.cols() - 1).setOnes();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
  return svd.singularValues().minCoeff() > threshold;
}

bool affine_rank_ok(const std::vector<ExtendedPoint>& points, const ProblemSpec& spec, const RbfKind& kind) {
  if (kind.degree() != 1) return true;
  return affine_rank_ok(to_unit_rows(points, spec), spec.eliminated_columns());
}

std::vector<ExtendedPoint> initial_design(const ProblemSpec& spec, int count, const RbfKind& kind,
                                          const InitConfig& cfg, Rng& rng) {
  if (cfg.max_regeneration_attempts < 1) throw Error("initial_design: max_regeneration_attempts must be >= 1");
  for (int attempt = 0; attempt < cfg.max_regeneration_attempts; ++attempt) {
    auto design = latin_hypercube(spec, count, rng, cfg.candidates);
    if (min_pairwise_distance(design, spec) <= 1e-10) continue;
    if (!affine_rank_ok(design, spec, kind)) continue;
    return design;
  }
  throw DesignError("could not generate a nondegenerate initial design in " +
                    std::to_string(cfg.max_regeneration_attempts) + " attempts");
}

}  // namespace rbfmix

#include "rbfmix/search.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

namespace rbfmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (num) / (hi - lo), or 0 for a degenerate range.
double ratio(double num, double lo, double hi) { return hi > lo ? num / (hi - lo) : 0.0; }

Eigen::Index argmin_first(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

}  // namespace

CycleState CycleState::start(int kappa, bool infstep) {
  if (kappa < 1) throw Error("cycle length must be positive");
  CycleState s;
  s.kappa = kappa;
  s.infstep_enabled = infstep;
  s.step = s.first_step();
  return s;
}

bool CycleState::advance() {
  if (step >= kappa) {
    step = first_step();
    return true;
  }
  ++step;
  return false;
}

double gutmann_target(int step, int kappa, double s_ystar, double f_max) {
  if (step == kInfStep) return -kInf;
  if (step >= kappa) return s_ystar;
  const double w = static_cast<double>((kappa - step) * (kappa - step)) / (static_cast<double>(kappa) * kappa);
  return s_ystar - w * (f_max - s_ystar);
}

double gutmann_h(double f_star, std::optional<double> mu, double s_value, int degree) {
  if (!mu) return 0.0;
  const double sign = (degree + 1) % 2 == 0 ? 1.0 : -1.0;
  const double g = sign * *mu;
  if (std::isinf(f_star)) return 1.0 / g;
  const double gap = s_value - f_star;
  return 1.0 / (g * gap * gap);
}

double msrsm_weight(int step, int kappa) {
  if (step == kInfStep) return kInf;
  if (step >= kappa) return 0.0;
  return std::max(static_cast<double>(kappa - step - 1) / kappa, 0.05);
}

namespace {

double score_with(double dist, double s_value, double dmin, double dmax, double smin, double smax, double alpha,
                  MsrsmVariant variant) {
  if (std::isinf(alpha)) return -dist;
  const double w2 = variant == MsrsmVariant::UnitSecondTerm ? 1.0 : 1.0 - alpha;
  return alpha * ratio(dmax - dist, dmin, dmax) + w2 * ratio(s_value - smin, smin, smax);
}

}  // namespace

double msrsm_score(double dist, double s_value, const Eigen::VectorXd& ref_dist, const Eigen::VectorXd& ref_s,
                   double alpha, MsrsmVariant variant) {
  if (ref_dist.size() == 0 || ref_s.size() == 0) throw SearchError("msrsm_score: empty reference set");
  return score_with(dist, s_value, ref_dist.minCoeff(), ref_dist.maxCoeff(), ref_s.minCoeff(), ref_s.maxCoeff(), alpha,
                    variant);
}

Eigen::VectorXd msrsm_scores(const Eigen::VectorXd& dist, const Eigen::VectorXd& s_values, double alpha,
                             MsrsmVariant variant) {
  if (dist.size() == 0) throw SearchError("msrsm_scores: empty reference set");
  const double dmin = dist.minCoeff();
  const double dmax = dist.maxCoeff();
  const double smin = s_values.minCoeff();
  const double smax = s_values.maxCoeff();
  Eigen::VectorXd out(dist.size());
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    out[i] = score_with(dist[i], s_values[i], dmin, dmax, smin, smax, alpha, variant);
  }
  return out;
}

SubsolverResult minimize_surrogate(const Interpolant& model, const ProblemSpec& spec, const SubsolverConfig& sub,
                                   Rng& rng) {
  return minimize([&](const Eigen::MatrixXd& m) { return model.predict_batch(m); }, spec, sub, rng);
}

Proposal next_point(Algorithm algorithm, const CycleState& state, const SearchInput& in, const SubsolverConfig& sub,
                    Rng& rng) {
  const ProblemSpec& spec = *in.spec;
  const Interpolant& model = *in.model;
  const Eigen::MatrixXd& nodes = *in.all_nodes;
  const double tol = in.min_node_distance;
  Proposal out;

  const bool need_ystar = algorithm == Algorithm::Gutmann ? state.step != kInfStep : state.is_local();
  if (need_ystar) {
    SubsolverResult ys = minimize_surrogate(model, spec, sub, rng);
    out.s_ystar = ys.value;
    if (state.is_local() && ys.value < in.f_min - 1e-10 * std::abs(in.f_min)) {
      Eigen::MatrixXd row = ys.best.transpose();
      if (min_distances(row, nodes)[0] > tol) {
        out.point = ys.best;
        out.shortcut = true;
        out.surrogate_value = ys.value;
        return out;
      }
    }
  }

  BatchObjective objective;
  bool rescore_population = false;
  if (algorithm == Algorithm::Gutmann) {
    const int degree = model.kind().degree();
    const double sign = (degree + 1) % 2 == 0 ? 1.0 : -1.0;
    double f_star = -kInf;
    if (state.is_local()) {
      f_star = in.f_min - 1e-2 * std::abs(in.f_min);
    } else if (state.step != kInfStep) {
      f_star = gutmann_target(state.step, state.kappa, *out.s_ystar, in.f_max);
    }
    auto bump = std::make_shared<BumpinessEvaluator>(model.kind(), model.nodes(), model.eliminated_columns());
    objective = [&, bump, sign, f_star](const Eigen::MatrixXd& m) {
      const Eigen::VectorXd mu = bump->mu_batch(m, tol);
      const Eigen::VectorXd dist = min_distances(m, nodes);
      Eigen::VectorXd g(m.rows());
      if (std::isinf(f_star)) {
        g = sign * mu;
      } else {
        const Eigen::VectorXd s = model.predict_batch(m);
        g = (sign * mu.array() * (s.array() - f_star).square()).matrix();
      }
      // Minimizing g maximizes h = 1/g.
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (dist[i] <= tol || !(sign * mu[i] > 0.0) || std::isnan(g[i])) g[i] = kInf;
      }
      return g;
    };
  } else {
    const double alpha = state.is_local() ? 0.05 : msrsm_weight(state.step, state.kappa);
    const MsrsmVariant variant = in.variant;
    objective = [&, alpha, variant](const Eigen::MatrixXd& m) {
      const Eigen::VectorXd dist = min_distances(m, nodes);
      Eigen::VectorXd s = std::isinf(alpha) ? Eigen::VectorXd::Zero(m.rows()) : model.predict_batch(m);
      std::vector<Eigen::Index> valid;
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (dist[i] > tol) valid.push_back(i);
      }
      Eigen::VectorXd scores = Eigen::VectorXd::Constant(m.rows(), kInf);
      if (valid.empty()) return scores;
      Eigen::VectorXd vd(static_cast<Eigen::Index>(valid.size()));
      Eigen::VectorXd vs(vd.size());
      for (std::size_t t = 0; t < valid.size(); ++t) {
        vd[static_cast<Eigen::Index>(t)] = dist[valid[t]];
        vs[static_cast<Eigen::Index>(t)] = s[valid[t]];
      }
      const Eigen::VectorXd vscores = msrsm_scores(vd, vs, alpha, variant);
      for (std::size_t t = 0; t < valid.size(); ++t) scores[valid[t]] = vscores[static_cast<Eigen::Index>(t)];
      return scores;
    };
    rescore_population = sub.kind == SubsolverKind::Ga;
  }

  SubsolverResult res = minimize(objective, spec, sub, rng);
  Eigen::VectorXd chosen = res.best;
  double chosen_value = res.value;
  if (rescore_population) {
    // Scores from different generations use different reference sets; pick
    // from the final population, the reference set R.
    const Eigen::VectorXd final_scores = objective(res.population);
    const Eigen::Index i = argmin_first(final_scores);
    chosen = res.population.row(i).transpose();
    chosen_value = final_scores[i];
  }
  if (!std::isfinite(chosen_value)) {
    const Eigen::MatrixXd fresh = sample_unit(spec, std::max(1000, 100 * spec.extended_dim()), rng);
    const Eigen::VectorXd fresh_scores = objective(fresh);
    Eigen::Index i = argmin_first(fresh_scores);
    if (!std::isfinite(fresh_scores[i])) {
      const Eigen::VectorXd dist = min_distances(fresh, nodes);
      dist.maxCoeff(&i);
      if (!(dist[i] > tol)) throw SearchError("no candidate point distinct from the evaluated nodes");
    }
    chosen = fresh.row(i).transpose();
  }
  out.point = std::move(chosen);
  out.surrogate_value = model.predict(out.point);
  return out;
}

}  // namespace rbfmix

#include "rbfmix/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace rbfmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double snap_integer(const ProblemSpec& spec, int slot, double u) {
  const Bounds& b = spec.bounds(slot);
  const double w = b.upper - b.lower;
  if (w <= 0.0) return 0.0;
  const double v = std::clamp(std::round(b.lower + u * w), b.lower, b.upper);
  return (v - b.lower) / w;
}

}  // namespace

void RefineConfig::validate() const {
  if (!(0.0 <= kappa_rm && kappa_rm <= kappa_rs && kappa_rs < kappa_re)) {
    throw Error("refine: need 0 <= kappa_rm <= kappa_rs < kappa_re");
  }
  if (!(beta_mr > 0.0)) throw Error("refine: beta_mr must be positive");
  if (t_rs < 1 || t_rf < 1 || rounding_trials < 1) throw Error("refine: counts must be positive");
}

std::string_view stop_name(RefineStop s) {
  switch (s) {
    case RefineStop::IterationLimit: return "iteration_limit";
    case RefineStop::RadiusTooSmall: return "radius_too_small";
    case RefineStop::GradientSmall: return "gradient_small";
    case RefineStop::GeometryFailure: return "geometry_failure";
    case RefineStop::BudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

ReducedMap::ReducedMap(const ProblemSpec& spec) : spec_(&spec) {
  const auto& elim = spec.eliminated_columns();
  for (int j = 0; j < spec.extended_dim(); ++j) {
    if (std::find(elim.begin(), elim.end(), j) == elim.end()) kept_.push_back(j);
  }
  for (int h = 0; h < spec.n_categorical(); ++h) {
    if (spec.is_binary(h)) continue;
    std::vector<int> slots;
    for (int i = 0; i + 1 < spec.block_width(h); ++i) {
      const int slot = spec.block_offset(h) + i;
      slots.push_back(static_cast<int>(std::find(kept_.begin(), kept_.end(), slot) - kept_.begin()));
    }
    block_slots_.push_back(std::move(slots));
  }
}

Eigen::VectorXd ReducedMap::reduce(const Eigen::VectorXd& unit) const {
  Eigen::VectorXd r(dim());
  for (int i = 0; i < dim(); ++i) r[i] = unit[kept_[static_cast<std::size_t>(i)]];
  return r;
}

Eigen::VectorXd ReducedMap::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec_->extended_dim());
  for (int i = 0; i < dim(); ++i) u[kept_[static_cast<std::size_t>(i)]] = reduced[i];
  std::size_t b = 0;
  for (int h = 0; h < spec_->n_categorical(); ++h) {
    if (spec_->is_binary(h)) continue;
    double sum = 0.0;
    for (int pos : block_slots_[b]) sum += reduced[pos];
    u[spec_->block_offset(h) + spec_->block_width(h) - 1] = 1.0 - sum;
    ++b;
  }
  return u;
}

bool ReducedMap::feasible(const Eigen::VectorXd& reduced, double tol) const {
  if ((reduced.array() < -tol).any() || (reduced.array() > 1.0 + tol).any()) return false;
  for (const auto& slots : block_slots_) {
    double sum = 0.0;
    for (int pos : slots) sum += reduced[pos];
    if (sum > 1.0 + tol) return false;
  }
  return true;
}

Eigen::VectorXd ReducedMap::clip(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd r = reduced.cwiseMax(0.0).cwiseMin(1.0);
  for (const auto& slots : block_slots_) {
    double sum = 0.0;
    for (int pos : slots) sum += r[pos];
    if (sum > 1.0) {
      for (int pos : slots) r[pos] /= sum;
    }
  }
  return r;
}

double ReducedMap::max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, double t_max) const {
  double t = t_max;
  for (int i = 0; i < dim(); ++i) {
    if (d[i] > 0.0) t = std::min(t, (1.0 - x[i]) / d[i]);
    if (d[i] < 0.0) t = std::min(t, -x[i] / d[i]);
  }
  for (const auto& slots : block_slots_) {
    double sx = 0.0;
    double sd = 0.0;
    for (int pos : slots) {
      sx += x[pos];
      sd += d[pos];
    }
    if (sd > 0.0) t = std::min(t, (1.0 - sx) / sd);
  }
  return std::max(0.0, t);
}

Eigen::VectorXd ReducedMap::project_discrete(const Eigen::VectorXd& reduced) const {
  const ProblemSpec& spec = *spec_;
  Eigen::VectorXd u = expand(reduced);
  for (int j = spec.n_continuous(); j < spec.n_continuous() + spec.n_integer(); ++j) u[j] = snap_integer(spec, j, u[j]);
  for (int h = 0; h < spec.n_categorical(); ++h) {
    const int off = spec.block_offset(h);
    if (spec.is_binary(h)) {
      u[off] = u[off] >= 0.5 ? 1.0 : 0.0;
      continue;
    }
    const int w = spec.block_width(h);
    const auto z = u.segment(off, w);
    const double l1 = z.cwiseAbs().sum();
    int best = 0;
    double best_d = kInf;
    for (int i = 0; i < w; ++i) {
      const double d = l1 - std::abs(z[i]) + std::abs(1.0 - z[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    u.segment(off, w).setZero();
    u[off + best] = 1.0;
  }
  return reduce(u);
}

Eigen::VectorXd ReducedMap::discrete_steps() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < dim(); ++i) {
    const int slot = kept_[static_cast<std::size_t>(i)];
    switch (spec_->slot_kind(slot)) {
      case VarKind::Continuous: break;
      case VarKind::Integer: out[i] = 1.0 / spec_->unit_scale(slot); break;
      case VarKind::Categorical: out[i] = 1.0; break;
    }
  }
  return out;
}

std::optional<RefinementState> init_refinement(const Eigen::MatrixXd& unit_nodes, const Eigen::VectorXd& values,
                                               const ProblemSpec& spec, const RefineConfig& cfg) {
  const ReducedMap map(spec);
  const int n = map.dim();
  const Eigen::Index k = unit_nodes.rows();
  if (k < n + 1) return std::nullopt;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < k; ++i) {
    if (values[i] < values[best]) best = i;
  }
  if (!std::isfinite(values[best])) return std::nullopt;

  std::vector<Eigen::VectorXd> reduced;
  reduced.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) reduced.push_back(map.reduce(unit_nodes.row(i).transpose()));
  std::vector<double> dist(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    dist[static_cast<std::size_t>(i)] = (reduced[static_cast<std::size_t>(i)] - reduced[static_cast<std::size_t>(best)]).norm();
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (a == best || b == best) return a == best && b != best;
    return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
  });

  RefinementState st;
  for (int i = 0; i < n + 1; ++i) {
    const Eigen::Index idx = order[static_cast<std::size_t>(i)];
    if (!std::isfinite(values[idx])) continue;
    st.S.push_back(reduced[static_cast<std::size_t>(idx)]);
    st.S_values.push_back(values[idx]);
  }
  st.x_bar = reduced[static_cast<std::size_t>(best)];
  st.f_bar = values[best];
  const int hat = (n + 2) / 2;  // ceil((n+1)/2), 1-based
  const double d_hat = dist[static_cast<std::size_t>(order[static_cast<std::size_t>(hat - 1)])];
  st.rho = std::max(d_hat, cfg.beta_mr * std::exp2(cfg.beta_rm));
  return st;
}

namespace {

// Columns s_i - x_bar for every member of S except the one at x_bar.
Eigen::MatrixXd centered(const RefinementState& st, std::vector<std::size_t>* members) {
  std::size_t self = 0;
  double self_d = kInf;
  for (std::size_t i = 0; i < st.S.size(); ++i) {
    const double d = (st.S[i] - st.x_bar).norm();
    if (d < self_d) {
      self_d = d;
      self = i;
    }
  }
  const Eigen::Index n = st.x_bar.size();
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(st.S.size()) - 1);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < st.S.size(); ++i) {
    if (i == self) continue;
    m.col(c++) = st.S[i] - st.x_bar;
    if (members) members->push_back(i);
  }
  return m;
}

double min_singular(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  // A wide or tall matrix has min(rows, cols) singular values; a short set is degenerate.
  if (m.cols() < m.rows()) return 0.0;
  return sv.minCoeff();
}

}  // namespace

double geometry_quality(const RefinementState& state) { return min_singular(centered(state, nullptr)); }

namespace {

// x_bar moved along +-dir and projected onto the discrete grid. A direction
// that is mostly discrete is rescaled so its largest discrete entry moves one
// whole step; a move of length rho would round back onto x_bar.
std::optional<Eigen::VectorXd> repair_point(const RefinementState& state, const ReducedMap& map,
                                            const Eigen::VectorXd& dir) {
  const Eigen::VectorXd steps = map.discrete_steps();
  const Eigen::ArrayXd discrete = (steps.array() > 0.0).cast<double>();
  const double disc_norm = (dir.array() * discrete).matrix().norm();
  const double cont_norm = (dir.array() * (1.0 - discrete)).matrix().norm();
  Eigen::VectorXd move = state.rho * dir;
  if (disc_norm > 0.0 && disc_norm >= cont_norm) {
    double ratio = 0.0;
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      if (steps[i] > 0.0) ratio = std::max(ratio, std::abs(dir[i]) / steps[i]);
    }
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      if (steps[i] > 0.0) move[i] = dir[i] / ratio;
    }
  }
  const Eigen::VectorXd plus = state.x_bar + move;
  const Eigen::VectorXd minus = state.x_bar - move;
  std::vector<Eigen::VectorXd> tries;
  if (map.feasible(plus)) tries.push_back(plus);
  if (map.feasible(minus)) tries.push_back(minus);
  tries.push_back(map.clip(minus));
  tries.push_back(map.clip(plus));
  for (const auto& t : tries) {
    const Eigen::VectorXd p = map.project_discrete(t);
    bool duplicate = false;
    for (const auto& s : state.S) duplicate = duplicate || (s - p).norm() <= 1e-10;
    if (!duplicate) return p;
  }
  return std::nullopt;
}

std::optional<RefineProposal> propose_repair(RefinementState& state, const ReducedMap& map, Rng& rng) {
  const Eigen::Index n = state.x_bar.size();
  std::normal_distribution<double> normal;
  for (;;) {
    std::vector<std::size_t> members;
    const Eigen::MatrixXd m = centered(state, &members);
    const double tol = 1e-6 * state.rho;
    if (m.cols() < n) {
      state.stop_reason = RefineStop::GeometryFailure;
      return std::nullopt;
    }
    if (min_singular(m) >= tol) {
      state.repair_attempts = 0;
      return std::nullopt;
    }
    if (state.repair_attempts >= 5) {
      state.stop_reason = RefineStop::GeometryFailure;
      return std::nullopt;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixR().triangularView<Eigen::Upper>();
    Eigen::Index rank = 0;
    while (rank < std::min(r.rows(), r.cols()) && std::abs(r(rank, rank)) > tol) ++rank;
    rank = std::min(rank, n - 1);
    const Eigen::Index column = qr.colsPermutation().indices()[rank];

    Eigen::VectorXd dir = q.col(rank);
    if (state.repair_attempts > 0) {
      // Later attempts draw a random direction orthogonal to the good columns.
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = normal(rng);
      const Eigen::MatrixXd basis = q.leftCols(rank);
      dir -= basis * (basis.transpose() * dir);
      if (dir.norm() < 1e-12) dir = q.col(rank);
      dir.normalize();
    }
    ++state.repair_attempts;
    const auto p = repair_point(state, map, dir);
    if (!p) continue;
    RefineProposal out;
    out.kind = RefineProposal::Kind::Repair;
    out.unit = map.expand(*p);
    out.point = *p;
    out.replace = members[static_cast<std::size_t>(column)];
    return out;
  }
}

}  // namespace

std::optional<Eigen::VectorXd> geometry_repair(RefinementState& state, const ProblemSpec& spec,
                                               const UnitEvaluator& evaluate, Rng& rng) {
  const ReducedMap map(spec);
  std::optional<Eigen::VectorXd> inserted;
  while (auto prop = propose_repair(state, map, rng)) {
    const auto f = evaluate(prop->unit);
    if (!f) {
      state.stop_reason = RefineStop::BudgetExhausted;
      return inserted;
    }
    state.S[prop->replace] = prop->point;
    state.S_values[prop->replace] = std::isfinite(*f) ? *f : kInf;
    inserted = prop->point;
  }
  return inserted;
}

void fit_linear_model(RefinementState& state) {
  const Eigen::Index n = state.x_bar.size();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < state.S.size(); ++i) {
    if (std::isfinite(state.S_values[i])) rows.push_back(i);
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), n + 1);
  Eigen::VectorXd y(a.rows());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    a.row(static_cast<Eigen::Index>(t)).head(n) = state.S[rows[t]].transpose();
    a(static_cast<Eigen::Index>(t), n) = 1.0;
    y[static_cast<Eigen::Index>(t)] = state.S_values[rows[t]];
  }
  const Eigen::VectorXd coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(a).solve(y);
  state.c = coef.head(n);
  state.b = coef[n];
}

Eigen::VectorXd round_point(const Eigen::VectorXd& unit, const ProblemSpec& spec, const Eigen::VectorXd& c, int trials,
                            Rng& rng) {
  if (trials < 1) throw Error("round_point: trials must be positive");
  const ReducedMap map(spec);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd best;
  double best_score = kInf;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd x = unit;
    for (int j = spec.n_continuous(); j < spec.n_continuous() + spec.n_integer(); ++j) {
      const Bounds& b = spec.bounds(j);
      const double w = b.upper - b.lower;
      if (w <= 0.0) {
        x[j] = 0.0;
        continue;
      }
      const double v = std::clamp(b.lower + unit[j] * w, b.lower, b.upper);
      const double lo = std::floor(v);
      // Down with probability ceil(v) - v, up with probability v - floor(v).
      const double rounded = unif(rng) < v - lo ? lo + 1.0 : lo;
      x[j] = (std::clamp(rounded, b.lower, b.upper) - b.lower) / w;
    }
    for (int h = 0; h < spec.n_categorical(); ++h) {
      const int off = spec.block_offset(h);
      if (spec.is_binary(h)) {
        x[off] = unif(rng) < std::clamp(unit[off], 0.0, 1.0) ? 1.0 : 0.0;
        continue;
      }
      const int w = spec.block_width(h);
      Eigen::VectorXd z = unit.segment(off, w).cwiseMax(0.0);
      const double total = z.sum();
      int pick = 0;
      if (total <= 0.0) {
        pick = std::uniform_int_distribution<int>(0, w - 1)(rng);
      } else {
        double u = unif(rng) * total;
        pick = w - 1;
        for (int i = 0; i < w; ++i) {
          if (u < z[i]) {
            pick = i;
            break;
          }
          u -= z[i];
        }
      }
      x.segment(off, w).setZero();
      x[off + pick] = 1.0;
    }
    const double score = c.size() == map.dim() ? c.dot(map.reduce(x)) : 0.0;
    if (best.size() == 0 || score < best_score) {
      best = x;
      best_score = score;
    }
  }
  return best;
}

namespace {

std::optional<RefineProposal> propose_step(RefinementState& state, const ProblemSpec& spec, const ReducedMap& map,
                                           const RefineConfig& cfg, Rng& rng) {
  fit_linear_model(state);
  const double gnorm = state.c.norm();
  if (gnorm < cfg.eps_grad) {
    state.stop_reason = RefineStop::GradientSmall;
    return std::nullopt;
  }
  const Eigen::VectorXd d = -state.c / gnorm;
  const double t = map.max_step(state.x_bar, d, state.rho);
  const Eigen::VectorXd frac = state.x_bar + t * d;
  RefineProposal out;
  out.kind = RefineProposal::Kind::Step;
  out.unit = round_point(map.expand(frac), spec, state.c, cfg.rounding_trials, rng);
  out.point = map.reduce(out.unit);
  return out;
}

bool moves(const RefinementState& state, const RefineProposal& p) { return (p.point - state.x_bar).norm() > 1e-10; }

void apply_step(RefinementState& state, const Eigen::VectorXd& cand, bool moved, double f_new, const RefineConfig& cfg,
                bool allow_overrun) {
  const double expected = state.c.dot(state.x_bar - cand);
  double ratio = -kInf;
  if (moved && expected > 0.0 && std::isfinite(f_new)) ratio = (state.f_bar - f_new) / expected;

  if (ratio <= cfg.kappa_rs) state.rho *= 0.5;
  if (ratio >= cfg.kappa_re) state.rho *= 2.0;
  if (ratio >= cfg.kappa_rm) {
    state.x_bar = cand;
    state.f_bar = f_new;
  }
  if (moved) {
    bool present = false;
    for (const auto& s : state.S) present = present || (s - cand).norm() <= 1e-10;
    if (!present) {
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < state.S.size(); ++i) {
        const double dd = (state.S[i] - state.x_bar).norm();
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      if ((cand - state.x_bar).norm() < far_d) {
        state.S[far] = cand;
        state.S_values[far] = f_new;
      }
    }
  }
  ++state.iterations_done;
  if (state.rho < cfg.beta_mr) {
    state.stop_reason = RefineStop::RadiusTooSmall;
  } else if (state.iterations_done >= cfg.t_rs && !allow_overrun) {
    state.stop_reason = RefineStop::IterationLimit;
  }
}

}  // namespace

void refinement_iteration(RefinementState& state, const ProblemSpec& spec, const RefineConfig& cfg,
                          const UnitEvaluator& evaluate, Rng& rng, bool allow_overrun) {
  const ReducedMap map(spec);
  const auto prop = propose_step(state, spec, map, cfg, rng);
  if (!prop) return;
  double f_new = state.f_bar;
  const bool moved = moves(state, *prop);
  if (moved) {
    const auto f = evaluate(prop->unit);
    if (!f) {
      state.stop_reason = RefineStop::BudgetExhausted;
      return;
    }
    f_new = std::isfinite(*f) ? *f : kInf;
  }
  apply_step(state, prop->point, moved, f_new, cfg, allow_overrun);
}

std::optional<RefineProposal> refine_propose(RefinementState& state, const ProblemSpec& spec, const RefineConfig& cfg,
                                             Rng& rng, bool allow_overrun) {
  const ReducedMap map(spec);
  while (!state.stop_reason) {
    if (auto repair = propose_repair(state, map, rng)) return repair;
    if (state.stop_reason) break;
    auto step = propose_step(state, spec, map, cfg, rng);
    if (!step) break;
    if (moves(state, *step)) return step;
    apply_step(state, step->point, false, state.f_bar, cfg, allow_overrun);
  }
  return std::nullopt;
}

void refine_accept(RefinementState& state, const RefineProposal& prop, double f, const RefineConfig& cfg,
                   bool allow_overrun) {
  const double v = std::isfinite(f) ? f : kInf;
  if (prop.kind == RefineProposal::Kind::Repair) {
    state.S[prop.replace] = prop.point;
    state.S_values[prop.replace] = v;
    return;
  }
  apply_step(state, prop.point, true, v, cfg, allow_overrun);
}

bool should_trigger(int cycles_since_last, bool improved_since_last, bool last_stop_was_iteration_limit,
                    const RefineConfig& cfg) {
  return cycles_since_last >= cfg.t_rf && (improved_since_last || last_stop_was_iteration_limit);
}

RefineOutcome run_refinement(const Eigen::MatrixXd& unit_nodes, const Eigen::VectorXd& values, const ProblemSpec& spec,
                             const RefineConfig& cfg, const UnitEvaluator& evaluate,
                             const std::function<int()>& remaining, Rng& rng) {
  RefineOutcome out;
  auto state = init_refinement(unit_nodes, values, spec, cfg);
  if (!state) return out;
  const double f_start = state->f_bar;
  const int n = spec.extended_dim();
  while (auto prop = refine_propose(*state, spec, cfg, rng, remaining() <= n + 1)) {
    const auto f = evaluate(prop->unit);
    if (!f) {
      state->stop_reason = RefineStop::BudgetExhausted;
      break;
    }
    refine_accept(*state, *prop, *f, cfg, remaining() <= n + 1);
  }
  out.stop = state->stop_reason;
  out.f_bar = state->f_bar;
  out.improved = state->f_bar < f_start;
  return out;
}

}  // namespace rbfmix

#include "rbfmix/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rbfmix/modelsel.hpp"

namespace rbfmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNodeTol = 1e-10;

enum Stream : std::uint32_t { kSearchStream = 1, kDesignStream = 2, kLatencyStream = 3 };

}  // namespace

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Global: return "global";
    case Phase::Local: return "local";
    case Phase::InfStep: return "infstep";
    case Phase::Refine: return "refine";
    case Phase::Restore: return "restore";
  }
  return "unknown";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (Phase p : {Phase::Init, Phase::Global, Phase::Local, Phase::InfStep, Phase::Refine, Phase::Restore}) {
    if (phase_name(p) == name) return p;
  }
  return std::nullopt;
}

double LatencyModel::sample(Rng& rng) const {
  const double x = std::exp(std::normal_distribution<double>(mu, sigma)(rng));
  return std::min(x, cap);
}

std::vector<double> EvaluationTrace::best_curve() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.best);
  return out;
}

int OptimizerConfig::effective_budget(const ProblemSpec& spec) const {
  return budget.value_or(50 * (spec.extended_dim() + 1));
}

bool OptimizerConfig::effective_infstep() const { return infstep.value_or(algorithm == Algorithm::Gutmann); }

SubsolverConfig OptimizerConfig::subsolver_config() const { return SubsolverConfig::make(subsolver, intensive_subsolver); }

Eigen::VectorXd maximin_point(const Eigen::MatrixXd& nodes, const ProblemSpec& spec, const SubsolverConfig& sub,
                              Rng& rng) {
  const SubsolverResult res = minimize(
      [&](const Eigen::MatrixXd& m) -> Eigen::VectorXd { return -min_distances(m, nodes); }, spec, sub, rng);
  return res.best;
}

std::optional<RestorationResult> restoration_step(const Eigen::MatrixXd& nodes, const ProblemSpec& spec,
                                                  const RbfKind& kind, const SubsolverConfig& sub, Rng& rng) {
  const Eigen::Index k = nodes.rows();
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    Eigen::MatrixXd others(k - 1, nodes.cols());
    for (Eigen::Index r = 0, t = 0; r < k; ++r) {
      if (r != i) others.row(t++) = nodes.row(r);
    }
    const Eigen::VectorXd x = maximin_point(others, spec, sub, rng);
    Eigen::MatrixXd xi = nodes.row(i);
    Eigen::MatrixXd xr = x.transpose();
    const double old_d = k > 1 ? min_distances(xi, others)[0] : kInf;
    const double new_d = k > 1 ? min_distances(xr, others)[0] : kInf;
    if (new_d < old_d || new_d <= kNodeTol) continue;
    Eigen::MatrixXd swapped = nodes;
    swapped.row(i) = x.transpose();
    if (system_invertible(kind, swapped, spec.eliminated_columns())) return RestorationResult{static_cast<int>(i), x};
  }
  return std::nullopt;
}

std::vector<ExtendedPoint> make_initial_design(const ProblemSpec& spec, const OptimizerConfig& cfg, int count,
                                               Rng& design_rng) {
  if (cfg.initial_design) return *cfg.initial_design;
  const RbfKind rank_kind = cfg.fixed_kernel.value_or(RbfKind::with_default_shape(RbfKernel::ThinPlateSpline));
  try {
    return initial_design(spec, count, rank_kind, cfg.init, design_rng);
  } catch (const DesignError&) {
    return latin_hypercube(spec, count, design_rng, cfg.init.candidates);
  }
}

namespace {

class SerialEngine {
 public:
  SerialEngine(const ProblemSpec& spec, const OptimizerConfig& cfg)
      : spec_(spec),
        cfg_(cfg),
        sub_(cfg.subsolver_config()),
        rng_(make_rng(cfg.seed, kSearchStream)),
        design_rng_(make_rng(cfg.design_seed.value_or(cfg.seed), kDesignStream)),
        latency_rng_(make_rng(cfg.seed, kLatencyStream)),
        budget_(cfg.effective_budget(spec)),
        start_(std::chrono::steady_clock::now()) {
    cfg.refine.validate();
    if (cfg.kappa < 1) throw Error("kappa must be positive");
  }

  RunResult run();

 private:
  double now() const {
    if (cfg_.simulated_latency) return sim_time_;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  bool out_of_time() const { return now() >= cfg_.wall_clock_limit; }
  bool exhausted() const { return result_.evaluations >= budget_ || out_of_time() || result_.aborted; }

  std::optional<double> evaluate(const Eigen::VectorXd& unit, Phase phase);
  void run_initial(const std::vector<ExtendedPoint>& design);
  void model_data(Eigen::MatrixXd& nodes, Eigen::VectorXd& values, std::vector<std::size_t>& index) const;
  Eigen::MatrixXd all_nodes() const;
  void do_refinement();
  bool do_restoration(const RbfKind& kind);
  void do_restart();
  void reset_cycle();

  const ProblemSpec& spec_;
  const OptimizerConfig& cfg_;
  SubsolverConfig sub_;
  Rng rng_;
  Rng design_rng_;
  Rng latency_rng_;
  int budget_;
  std::chrono::steady_clock::time_point start_;
  double sim_time_ = 0.0;

  std::vector<Eigen::VectorXd> pts_;
  std::vector<double> vals_;
  std::vector<char> active_;
  std::size_t best_index_ = 0;

  CycleState cycle_;
  ModelSelState modelsel_;
  ModelChoice choice_;
  bool cycle_start_ = true;
  int cycles_since_refine_ = 0;
  double best_at_mark_ = kInf;
  bool last_stop_iteration_limit_ = false;
  int restart_failures_ = 0;

  RunResult result_;
};

std::optional<double> SerialEngine::evaluate(const Eigen::VectorXd& unit, Phase phase) {
  if (exhausted()) return std::nullopt;
  const ExtendedPoint x = spec_.from_unit(unit);
  const Eigen::VectorXd u = spec_.to_unit(x);
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if ((pts_[i] - u).norm() <= kNodeTol) {
      active_[i] = 1;
      return vals_[i];
    }
  }
  const OriginalPoint p = decode(x, spec_);
  double f = kInf;
  try {
    f = spec_.evaluate(p);
  } catch (const std::exception&) {
    f = kInf;
  }
  if (!std::isfinite(f)) f = kInf;
  ++result_.evaluations;
  if (cfg_.simulated_latency) sim_time_ += cfg_.simulated_latency->sample(latency_rng_);

  pts_.push_back(u);
  vals_.push_back(f);
  active_.push_back(1);
  if (f < result_.best_value || result_.best_x.size() == 0) {
    result_.best_value = std::min(result_.best_value, f);
    result_.best_x = x;
    result_.best_point = p;
    best_index_ = pts_.size() - 1;
  }
  TraceRecord rec;
  rec.index = result_.evaluations;
  rec.phase = phase;
  rec.point = p;
  rec.xpoint = x;
  rec.f = f;
  rec.best = result_.best_value;
  rec.wall_clock = now();
  result_.trace.records.push_back(std::move(rec));
  return f;
}

void SerialEngine::model_data(Eigen::MatrixXd& nodes, Eigen::VectorXd& values, std::vector<std::size_t>& index) const {
  index.clear();
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (active_[i] && std::isfinite(vals_[i])) index.push_back(i);
  }
  nodes.resize(static_cast<Eigen::Index>(index.size()), spec_.extended_dim());
  values.resize(nodes.rows());
  for (std::size_t t = 0; t < index.size(); ++t) {
    nodes.row(static_cast<Eigen::Index>(t)) = pts_[index[t]].transpose();
    values[static_cast<Eigen::Index>(t)] = vals_[index[t]];
  }
}

Eigen::MatrixXd SerialEngine::all_nodes() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts_.size()), spec_.extended_dim());
  for (std::size_t i = 0; i < pts_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts_[i].transpose();
  return m;
}

void SerialEngine::run_initial(const std::vector<ExtendedPoint>& design) {
  for (const auto& x : design) {
    if (!evaluate(spec_.to_unit(x), Phase::Init)) break;
  }
}

void SerialEngine::reset_cycle() {
  cycle_ = CycleState::start(cfg_.kappa, cfg_.effective_infstep());
  cycle_start_ = true;
  cycles_since_refine_ = 0;
  best_at_mark_ = result_.best_value;
  last_stop_iteration_limit_ = false;
}

void SerialEngine::do_refinement() {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  std::vector<std::size_t> index;
  model_data(nodes, values, index);
  const UnitEvaluator eval = [this](const Eigen::VectorXd& u) { return evaluate(u, Phase::Refine); };
  const auto remaining = [this] { return budget_ - result_.evaluations; };
  const RefineOutcome out = run_refinement(nodes, values, spec_, cfg_.refine, eval, remaining, rng_);
  last_stop_iteration_limit_ = out.stop == RefineStop::IterationLimit;
}

bool SerialEngine::do_restoration(const RbfKind& kind) {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  std::vector<std::size_t> index;
  model_data(nodes, values, index);
  const auto res = restoration_step(nodes, spec_, kind, sub_, rng_);
  if (!res) return false;
  active_[index[static_cast<std::size_t>(res->index)]] = 0;
  evaluate(res->point, Phase::Restore);
  return true;
}

void SerialEngine::do_restart() {
  ++result_.restarts;
  if (++restart_failures_ > cfg_.max_restart_failures) {
    result_.aborted = true;
    result_.abort_reason = "restart limit reached";
    return;
  }
  std::fill(active_.begin(), active_.end(), 0);
  if (!pts_.empty()) active_[best_index_] = 1;
  const int n_init = initial_sample_count(spec_.extended_dim(), 1);
  if (n_init > 1) {
    const auto design = latin_hypercube(spec_, n_init - 1, design_rng_, cfg_.init.candidates);
    run_initial(design);
  }
  modelsel_ = ModelSelState{};
  modelsel_.t_mcv = cfg_.t_mcv;
  reset_cycle();
}

RunResult SerialEngine::run() {
  const int n = spec_.extended_dim();
  const int n_init = std::min(initial_sample_count(n, 1), budget_);
  run_initial(make_initial_design(spec_, cfg_, n_init, design_rng_));
  modelsel_.t_mcv = cfg_.t_mcv;
  const RbfKind tps = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
  choice_ = {cfg_.fixed_kernel.value_or(tps), cfg_.fixed_kernel.value_or(tps)};
  reset_cycle();

  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  std::vector<std::size_t> index;
  while (!exhausted()) {
    if (cycle_start_) {
      if (cfg_.refine_enabled &&
          should_trigger(cycles_since_refine_, result_.best_value < best_at_mark_, last_stop_iteration_limit_,
                         cfg_.refine)) {
        do_refinement();
        cycles_since_refine_ = 0;
        best_at_mark_ = result_.best_value;
        if (exhausted()) break;
      }
      model_data(nodes, values, index);
      if (!cfg_.fixed_kernel) {
        const Eigen::VectorXd fit_values = cfg_.clip_codomain ? clip_values(values) : values;
        const ModelChoice c = choose_models(modelsel_, nodes, fit_values, spec_.eliminated_columns());
        if (result_.kernel_history.empty() || !(c.local == choice_.local) || !(c.global == choice_.global)) {
          result_.kernel_history.push_back({result_.evaluations, c.local, c.global});
        }
        choice_ = c;
      } else if (result_.kernel_history.empty()) {
        result_.kernel_history.push_back({result_.evaluations, choice_.local, choice_.global});
      }
      cycle_start_ = false;
    }

    model_data(nodes, values, index);
    const Eigen::MatrixXd everything = all_nodes();
    if (nodes.rows() == 0) {
      if (!evaluate(maximin_point(everything, spec_, sub_, rng_), Phase::Global)) break;
      if (cycle_.advance()) {
        cycle_start_ = true;
        ++cycles_since_refine_;
      }
      continue;
    }

    const RbfKind kind = cycle_.uses_local_model() ? choice_.local : choice_.global;
    const Eigen::VectorXd fit_values = cfg_.clip_codomain ? clip_values(values) : values;
    Interpolant model;
    try {
      model = fit(kind, nodes, fit_values, spec_.eliminated_columns());
    } catch (const UnsolvableSystemError&) {
      if (!do_restoration(kind)) do_restart();
      continue;
    }

    SearchInput in;
    in.spec = &spec_;
    in.model = &model;
    in.all_nodes = &everything;
    in.f_min = fit_values.minCoeff();
    in.f_max = fit_values.maxCoeff();
    in.variant = cfg_.msrsm_variant;
    Proposal prop;
    try {
      prop = next_point(cfg_.algorithm, cycle_, in, sub_, rng_);
    } catch (const SearchError&) {
      do_restart();
      continue;
    }
    const Phase phase = cycle_.step == kInfStep ? Phase::InfStep : cycle_.is_local() ? Phase::Local : Phase::Global;
    if (!evaluate(prop.point, phase)) break;
    restart_failures_ = 0;
    if (cycle_.advance()) {
      cycle_start_ = true;
      ++cycles_since_refine_;
    }
  }
  return std::move(result_);
}

}  // namespace

RunResult run(const ProblemSpec& spec, const OptimizerConfig& cfg) {
  SerialEngine engine(spec, cfg);
  return engine.run();
}

}  // namespace rbfmix

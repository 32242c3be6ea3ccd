#include "rbfmix/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "rbfmix/modelsel.hpp"

namespace rbfmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNodeTol = 1e-10;

enum Stream : std::uint32_t { kSearchStream = 1, kDesignStream = 2, kLatencyStream = 3, kTaskStream = 4 };

bool better(const Task& a, const Task& b) {
  if (a.kind != b.kind) return a.kind == TaskKind::EvalF;
  return a.submit_order < b.submit_order;
}

}  // namespace

std::optional<std::size_t> next_task(const std::vector<Task>& queue, bool refinement_worker) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (queue[i].refinement != refinement_worker) continue;
    if (!best || better(queue[i], queue[*best])) best = i;
  }
  return best;
}

double make_temporary_value(double f_min, double s_value) { return std::max(f_min, s_value); }

void SimulatedExecutor::submit(std::uint64_t id, std::function<void()> work, double duration) {
  work();
  events_.push({now_ + std::max(0.0, duration), seq_++, id});
}

std::uint64_t SimulatedExecutor::wait_next() {
  if (events_.empty()) throw Error("SimulatedExecutor: nothing in flight");
  const Event e = events_.top();
  events_.pop();
  now_ = std::max(now_, e.time);
  return e.id;
}

ThreadExecutor::ThreadExecutor() : start_(std::chrono::steady_clock::now()) {}

ThreadExecutor::~ThreadExecutor() {
  for (auto& [id, t] : threads_) {
    if (t.joinable()) t.join();
  }
}

void ThreadExecutor::submit(std::uint64_t id, std::function<void()> work, double) {
  std::lock_guard<std::mutex> lock(mu_);
  threads_.emplace(id, std::thread([this, id, work = std::move(work)] {
                     try {
                       work();
                     } catch (...) {
                     }
                     {
                       std::lock_guard<std::mutex> inner(mu_);
                       done_.push_back(id);
                     }
                     cv_.notify_one();
                   }));
}

std::uint64_t ThreadExecutor::wait_next() {
  std::unique_lock<std::mutex> lock(mu_);
  if (threads_.empty()) throw Error("ThreadExecutor: nothing in flight");
  cv_.wait(lock, [this] { return !done_.empty(); });
  const std::uint64_t id = done_.front();
  done_.pop_front();
  auto it = threads_.find(id);
  std::thread t = std::move(it->second);
  threads_.erase(it);
  lock.unlock();
  t.join();
  return id;
}

double ThreadExecutor::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

std::size_t ThreadExecutor::in_flight() const {
  std::lock_guard<std::mutex> lock(mu_);
  return threads_.size();
}

namespace {

struct ComputePayload {
  Interpolant model;
  Eigen::MatrixXd everything;
  double f_min = 0.0;
  double f_max = 0.0;
  CycleState cycle;
  std::uint64_t seed = 0;
};

struct Job {
  Task task;
  Phase phase = Phase::Init;
  int retries = 0;
  bool temporary = false;
  bool running = false;
  // EvalF
  double f = kInf;
  bool crashed = false;
  std::optional<RefineProposal> refine;
  std::uint64_t refine_epoch = 0;
  // ComputePoint
  std::shared_ptr<const ComputePayload> payload;
  std::optional<Eigen::VectorXd> proposed;
  double s_value = 0.0;
};

class ParallelEngine {
 public:
  ParallelEngine(const ProblemSpec& spec, const OptimizerConfig& cfg, int workers, Executor& ex)
      : spec_(spec),
        cfg_(cfg),
        ex_(ex),
        sub_(cfg.subsolver_config()),
        rng_(make_rng(cfg.seed, kSearchStream)),
        design_rng_(make_rng(cfg.design_seed.value_or(cfg.seed), kDesignStream)),
        latency_rng_(make_rng(cfg.seed, kLatencyStream)),
        latency_(cfg.simulated_latency.value_or(LatencyModel{})),
        budget_(cfg.effective_budget(spec)),
        workers_(workers),
        general_(workers - 1) {
    cfg.refine.validate();
    if (cfg.kappa < 1) throw Error("kappa must be positive");
    stats_.workers = workers;
  }

  RunResult run();

 private:
  bool out_of_time() const { return ex_.now() >= cfg_.wall_clock_limit; }
  std::shared_ptr<Job> enqueue_eval(const Eigen::VectorXd& unit, Phase phase, bool refinement);
  bool is_known(const Eigen::VectorXd& u) const;
  std::optional<std::size_t> true_node(const Eigen::VectorXd& u) const;
  void dispatch();
  bool start_next(bool refinement_worker);
  void start(const std::shared_ptr<Job>& job, std::uint64_t id);
  bool create_compute_task();
  void complete(std::uint64_t id);
  void complete_eval(std::uint64_t id, const std::shared_ptr<Job>& job);
  void complete_compute(const std::shared_ptr<Job>& job);
  void record(const Eigen::VectorXd& u, double f, Phase phase);
  void model_data(Eigen::MatrixXd& nodes, Eigen::VectorXd& values, bool with_temporaries) const;
  Eigen::MatrixXd all_points() const;
  bool outstanding() const;
  void restart();
  void reset_cycle();
  void cycle_start();
  void pump_refinement();
  void end_refinement();
  void begin_refinement();
  void check_temporary(const Eigen::VectorXd& u);

  const ProblemSpec& spec_;
  const OptimizerConfig& cfg_;
  Executor& ex_;
  SubsolverConfig sub_;
  Rng rng_;
  Rng design_rng_;
  Rng latency_rng_;
  LatencyModel latency_;
  int budget_;
  int workers_;
  int general_;
  std::mutex oracle_mu_;

  std::vector<Eigen::VectorXd> pts_;
  std::vector<double> vals_;
  std::vector<char> active_;
  std::size_t best_index_ = 0;

  std::map<std::uint64_t, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_order_ = 0;
  int submitted_ = 0;
  int init_outstanding_ = 0;
  int general_busy_ = 0;
  bool refine_busy_ = false;
  int evals_running_ = 0;
  int compute_pending_ = 0;
  int compute_failures_ = 0;

  CycleState cycle_;
  ModelSelState modelsel_;
  ModelChoice choice_;
  bool cycle_start_ = true;
  int cycles_since_refine_ = 0;
  double best_at_mark_ = kInf;
  bool last_stop_iteration_limit_ = false;
  int restart_failures_ = 0;

  std::optional<RefinementState> refine_;
  std::uint64_t refine_epoch_ = 0;
  int refine_evals_ = 0;

  ParallelStats stats_;
  RunResult result_;
};

std::optional<std::size_t> ParallelEngine::true_node(const Eigen::VectorXd& u) const {
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if ((pts_[i] - u).norm() <= kNodeTol) return i;
  }
  return std::nullopt;
}

bool ParallelEngine::is_known(const Eigen::VectorXd& u) const {
  if (true_node(u)) return true;
  for (const auto& [id, job] : jobs_) {
    if (job->task.kind == TaskKind::EvalF && (job->task.point - u).norm() <= kNodeTol) return true;
  }
  return false;
}

std::shared_ptr<Job> ParallelEngine::enqueue_eval(const Eigen::VectorXd& unit, Phase phase, bool refinement) {
  auto job = std::make_shared<Job>();
  job->task.kind = TaskKind::EvalF;
  job->task.submit_order = next_order_++;
  job->task.refinement = refinement;
  job->task.point = spec_.to_unit(spec_.from_unit(unit));
  job->phase = phase;
  jobs_.emplace(job->task.submit_order, job);
  ++submitted_;
  if (phase == Phase::Init) ++init_outstanding_;
  return job;
}

bool ParallelEngine::outstanding() const { return !jobs_.empty(); }

Eigen::MatrixXd ParallelEngine::all_points() const {
  std::vector<const Eigen::VectorXd*> rows;
  for (const auto& p : pts_) rows.push_back(&p);
  for (const auto& [id, job] : jobs_) {
    if (job->task.kind == TaskKind::EvalF) rows.push_back(&job->task.point);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), spec_.extended_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
  return m;
}

void ParallelEngine::model_data(Eigen::MatrixXd& nodes, Eigen::VectorXd& values, bool with_temporaries) const {
  std::vector<const Eigen::VectorXd*> rows;
  std::vector<double> v;
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (active_[i] && std::isfinite(vals_[i])) {
      rows.push_back(&pts_[i]);
      v.push_back(vals_[i]);
    }
  }
  if (with_temporaries && !v.empty()) {
    const double f_min = *std::min_element(v.begin(), v.end());
    for (const auto& [id, job] : jobs_) {
      if (!job->temporary) continue;
      rows.push_back(&job->task.point);
      v.push_back(make_temporary_value(f_min, job->s_value));
    }
  }
  nodes.resize(static_cast<Eigen::Index>(rows.size()), spec_.extended_dim());
  values.resize(nodes.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nodes.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
    values[static_cast<Eigen::Index>(i)] = v[i];
  }
}

void ParallelEngine::record(const Eigen::VectorXd& u, double f, Phase phase) {
  if (true_node(u)) stats_.invariants_ok = false;
  const ExtendedPoint x = spec_.from_unit(u);
  const OriginalPoint p = decode(x, spec_);
  ++result_.evaluations;
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
  rec.wall_clock = ex_.now();
  result_.trace.records.push_back(std::move(rec));
}

void ParallelEngine::check_temporary(const Eigen::VectorXd& u) {
  if (true_node(u)) stats_.invariants_ok = false;
  for (const auto& [id, job] : jobs_) {
    if (job->temporary && (job->task.point - u).norm() <= kNodeTol) stats_.invariants_ok = false;
  }
}

void ParallelEngine::reset_cycle() {
  cycle_ = CycleState::start(cfg_.kappa, cfg_.effective_infstep());
  cycle_start_ = true;
  cycles_since_refine_ = 0;
  best_at_mark_ = result_.best_value;
  last_stop_iteration_limit_ = false;
}

void ParallelEngine::restart() {
  ++result_.restarts;
  if (++restart_failures_ > cfg_.max_restart_failures) {
    result_.aborted = true;
    result_.abort_reason = "restart limit reached";
    return;
  }
  refine_.reset();
  std::fill(active_.begin(), active_.end(), 0);
  if (!pts_.empty()) active_[best_index_] = 1;
  const int n_init = initial_sample_count(spec_.extended_dim(), workers_);
  if (n_init > 1) {
    for (const auto& x : latin_hypercube(spec_, n_init - 1, design_rng_, cfg_.init.candidates)) {
      const Eigen::VectorXd u = spec_.to_unit(x);
      if (submitted_ >= budget_) break;
      if (!is_known(u)) enqueue_eval(u, Phase::Init, false);
    }
  }
  modelsel_ = ModelSelState{};
  modelsel_.t_mcv = cfg_.t_mcv;
  compute_failures_ = 0;
  reset_cycle();
}

void ParallelEngine::begin_refinement() {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  model_data(nodes, values, false);
  refine_ = init_refinement(nodes, values, spec_, cfg_.refine);
  ++refine_epoch_;
  if (!refine_) end_refinement();
}

void ParallelEngine::end_refinement() {
  last_stop_iteration_limit_ = refine_ && refine_->stop_reason == RefineStop::IterationLimit;
  refine_.reset();
  cycles_since_refine_ = 0;
  best_at_mark_ = result_.best_value;
}

void ParallelEngine::pump_refinement() {
  const int n = spec_.extended_dim();
  while (refine_ && !refine_busy_) {
    for (const auto& [id, job] : jobs_) {
      if (job->task.refinement) return;
    }
    if (refine_->stop_reason || submitted_ + compute_pending_ >= budget_ || out_of_time()) {
      end_refinement();
      return;
    }
    if (refine_evals_ + 1 > cfg_.refine_fraction_cap * (submitted_ + 1)) return;
    const bool overrun = budget_ - submitted_ <= n + 1;
    auto prop = refine_propose(*refine_, spec_, cfg_.refine, rng_, overrun);
    if (!prop) {
      end_refinement();
      return;
    }
    const Eigen::VectorXd u = spec_.to_unit(spec_.from_unit(prop->unit));
    if (const auto k = true_node(u)) {
      active_[*k] = 1;
      refine_accept(*refine_, *prop, vals_[*k], cfg_.refine, overrun);
      continue;
    }
    if (is_known(u)) {
      end_refinement();
      return;
    }
    auto job = enqueue_eval(u, Phase::Refine, true);
    job->refine = std::move(prop);
    job->refine_epoch = refine_epoch_;
    ++refine_evals_;
    ++stats_.refinement_tasks;
  }
}

void ParallelEngine::cycle_start() {
  if (cfg_.refine_enabled && !refine_ &&
      should_trigger(cycles_since_refine_, result_.best_value < best_at_mark_, last_stop_iteration_limit_,
                     cfg_.refine)) {
    begin_refinement();
  }
  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  model_data(nodes, values, false);
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

bool ParallelEngine::create_compute_task() {
  if (result_.aborted || out_of_time() || init_outstanding_ > 0) return false;
  if (submitted_ + compute_pending_ >= budget_) return false;
  if (cycle_start_) cycle_start();

  Eigen::MatrixXd nodes;
  Eigen::VectorXd values;
  model_data(nodes, values, true);
  if (nodes.rows() == 0) {
    const Eigen::VectorXd u = maximin_point(all_points(), spec_, sub_, rng_);
    if (is_known(u)) return false;
    enqueue_eval(u, Phase::Global, false);
    return true;
  }
  const RbfKind kind = cycle_.uses_local_model() ? choice_.local : choice_.global;
  const Eigen::VectorXd fit_values = cfg_.clip_codomain ? clip_values(values) : values;
  auto payload = std::make_shared<ComputePayload>();
  try {
    payload->model = fit(kind, nodes, fit_values, spec_.eliminated_columns());
  } catch (const UnsolvableSystemError&) {
    if (outstanding()) return false;
    restart();
    return !result_.aborted;
  }
  payload->everything = all_points();
  payload->f_min = fit_values.minCoeff();
  payload->f_max = fit_values.maxCoeff();
  payload->cycle = cycle_;
  payload->seed = rng_();

  auto job = std::make_shared<Job>();
  job->task.kind = TaskKind::ComputePoint;
  job->task.submit_order = next_order_++;
  job->phase = cycle_.step == kInfStep ? Phase::InfStep : cycle_.is_local() ? Phase::Local : Phase::Global;
  job->payload = std::move(payload);
  jobs_.emplace(job->task.submit_order, job);
  ++compute_pending_;
  ++stats_.type2_tasks;
  if (cycle_.advance()) {
    cycle_start_ = true;
    ++cycles_since_refine_;
  }
  return true;
}

void ParallelEngine::start(const std::shared_ptr<Job>& job, std::uint64_t id) {
  job->running = true;
  if (job->task.kind == TaskKind::ComputePoint) {
    const ProblemSpec* spec = &spec_;
    const Algorithm algorithm = cfg_.algorithm;
    const MsrsmVariant variant = cfg_.msrsm_variant;
    const SubsolverConfig sub = sub_;
    ex_.submit(
        id,
        [job, spec, algorithm, variant, sub] {
          const ComputePayload& pl = *job->payload;
          Rng rng = make_rng(pl.seed, kTaskStream);
          SearchInput in;
          in.spec = spec;
          in.model = &pl.model;
          in.all_nodes = &pl.everything;
          in.f_min = pl.f_min;
          in.f_max = pl.f_max;
          in.variant = variant;
          try {
            const Proposal prop = next_point(algorithm, pl.cycle, in, sub, rng);
            const Eigen::VectorXd u = spec->to_unit(spec->from_unit(prop.point));
            job->s_value = pl.model.predict(u);
            job->proposed = u;
          } catch (const Error&) {
            job->proposed.reset();
          }
        },
        cfg_.type2_compute_time);
    return;
  }
  for (const auto& [other_id, other] : jobs_) {
    if (other != job && other->running && other->task.kind == TaskKind::EvalF &&
        (other->task.point - job->task.point).norm() <= kNodeTol) {
      ++stats_.duplicate_evaluations;
    }
  }
  ++evals_running_;
  stats_.max_in_flight = std::max(stats_.max_in_flight, evals_running_);
  const double duration = latency_.sample(latency_rng_);
  const ProblemSpec* spec = &spec_;
  std::mutex* guard = spec_.objective_thread_safe() ? nullptr : &oracle_mu_;
  ex_.submit(
      id,
      [job, spec, guard] {
        const OriginalPoint p = decode(spec->from_unit(job->task.point), *spec);
        try {
          std::unique_lock<std::mutex> lock;
          if (guard) lock = std::unique_lock<std::mutex>(*guard);
          job->f = spec->evaluate(p);
          job->crashed = false;
        } catch (...) {
          job->crashed = true;
        }
      },
      duration);
}

bool ParallelEngine::start_next(bool refinement_worker) {
  std::vector<Task> queue;
  std::vector<std::uint64_t> ids;
  for (const auto& [id, job] : jobs_) {
    if (job->running) continue;
    queue.push_back(job->task);
    ids.push_back(id);
  }
  const auto pick = next_task(queue, refinement_worker);
  if (!pick) return false;
  start(jobs_.at(ids[*pick]), ids[*pick]);
  return true;
}

void ParallelEngine::dispatch() {
  for (;;) {
    bool progress = false;
    if (!refine_busy_) {
      pump_refinement();
      if (start_next(true)) {
        refine_busy_ = true;
        progress = true;
      }
    }
    while (general_busy_ < general_ && !result_.aborted) {
      if (!start_next(false)) {
        if (!create_compute_task()) break;
        if (!start_next(false)) continue;
      }
      ++general_busy_;
      progress = true;
    }
    if (!progress) break;
  }
}

void ParallelEngine::complete_compute(const std::shared_ptr<Job>& job) {
  --compute_pending_;
  if (!job->proposed) {
    ++compute_failures_;
    if (compute_failures_ >= 3 && !outstanding()) restart();
    return;
  }
  if (submitted_ >= budget_) return;
  const Eigen::VectorXd& u = *job->proposed;
  if (is_known(u)) {
    ++stats_.duplicate_proposals_dropped;
    return;
  }
  compute_failures_ = 0;
  restart_failures_ = 0;
  check_temporary(u);
  auto eval = enqueue_eval(u, job->phase, false);
  eval->temporary = true;
  eval->s_value = job->s_value;
  ++stats_.temporaries_created;
  int live = 0;
  for (const auto& [id, j] : jobs_) live += j->temporary ? 1 : 0;
  stats_.max_temporaries_outstanding = std::max(stats_.max_temporaries_outstanding, live);
}

void ParallelEngine::complete_eval(std::uint64_t id, const std::shared_ptr<Job>& job) {
  --evals_running_;
  if (job->crashed && job->retries == 0) {
    job->retries = 1;
    job->running = false;
    jobs_.emplace(id, job);
    return;
  }
  const double f = job->crashed || !std::isfinite(job->f) ? kInf : job->f;
  const double previous_best = result_.best_value;
  if (job->temporary) ++stats_.temporaries_converted;
  if (job->phase == Phase::Init) --init_outstanding_;
  record(job->task.point, f, job->phase);

  if (job->task.refinement) {
    if (refine_ && job->refine_epoch == refine_epoch_) {
      const bool overrun = budget_ - submitted_ <= spec_.extended_dim() + 1;
      refine_accept(*refine_, *job->refine, f, cfg_.refine, overrun);
    }
  } else if (refine_ && f < previous_best) {
    begin_refinement();
  }
}

void ParallelEngine::complete(std::uint64_t id) {
  auto it = jobs_.find(id);
  std::shared_ptr<Job> job = it->second;
  jobs_.erase(it);
  if (job->task.refinement) {
    refine_busy_ = false;
  } else {
    --general_busy_;
  }
  if (job->task.kind == TaskKind::ComputePoint) {
    complete_compute(job);
  } else {
    complete_eval(id, job);
  }
}

RunResult ParallelEngine::run() {
  const int n = spec_.extended_dim();
  const int n_init = std::min(initial_sample_count(n, workers_), budget_);
  for (const auto& x : make_initial_design(spec_, cfg_, n_init, design_rng_)) {
    const Eigen::VectorXd u = spec_.to_unit(x);
    if (submitted_ < budget_ && !is_known(u)) enqueue_eval(u, Phase::Init, false);
  }
  modelsel_.t_mcv = cfg_.t_mcv;
  const RbfKind tps = RbfKind::with_default_shape(RbfKernel::ThinPlateSpline);
  choice_ = {cfg_.fixed_kernel.value_or(tps), cfg_.fixed_kernel.value_or(tps)};
  reset_cycle();

  for (;;) {
    dispatch();
    if (ex_.in_flight() == 0) break;
    complete(ex_.wait_next());
  }
  if (stats_.temporaries_created != stats_.temporaries_converted) stats_.invariants_ok = false;
  if (stats_.duplicate_evaluations > 0 || stats_.max_in_flight > workers_) stats_.invariants_ok = false;
  result_.parallel = stats_;
  return std::move(result_);
}

}  // namespace

RunResult run_parallel(const ProblemSpec& spec, const OptimizerConfig& cfg, int workers, ExecutorKind executor) {
  if (workers < 1) throw Error("run_parallel: workers must be positive");
  if (workers == 1) {
    OptimizerConfig serial = cfg;
    if (executor == ExecutorKind::Simulated && !serial.simulated_latency) serial.simulated_latency = LatencyModel{};
    return run(spec, serial);
  }
  std::unique_ptr<Executor> ex;
  if (executor == ExecutorKind::Simulated) {
    ex = std::make_unique<SimulatedExecutor>();
  } else {
    ex = std::make_unique<ThreadExecutor>();
  }
  ParallelEngine engine(spec, cfg, workers, *ex);
  return engine.run();
}

}  // namespace rbfmix

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "rbfmix/engine.hpp"

namespace rbfmix {

enum class TaskKind { EvalF, ComputePoint };

struct Task {
  TaskKind kind = TaskKind::EvalF;
  std::uint64_t submit_order = 0;
  bool refinement = false;
  Eigen::VectorXd point;  ///< unit coordinates, EvalF only
};

/// Index into `queue` of the task a worker should take next: EvalF before
/// ComputePoint, then lowest submit_order. The refinement worker only takes
/// refinement tasks and the other workers never do.
std::optional<std::size_t> next_task(const std::vector<Task>& queue, bool refinement_worker = false);

double make_temporary_value(double f_min, double s_value);

/// Runs jobs and reports their completion in finishing order.
class Executor {
 public:
  virtual ~Executor() = default;
  /// `duration` drives simulated clocks and is ignored by real ones.
  virtual void submit(std::uint64_t id, std::function<void()> work, double duration) = 0;
  /// Blocks until some submitted job is done; returns its id.
  virtual std::uint64_t wait_next() = 0;
  virtual double now() const = 0;
  virtual std::size_t in_flight() const = 0;
};

/// Discrete-event executor: work runs at submission, completion is delivered
/// at the virtual time now + duration, ties by submission order.
class SimulatedExecutor final : public Executor {
 public:
  void submit(std::uint64_t id, std::function<void()> work, double duration) override;
  std::uint64_t wait_next() override;
  double now() const override { return now_; }
  std::size_t in_flight() const override { return events_.size(); }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    std::uint64_t id;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
};

/// One OS thread per job.
class ThreadExecutor final : public Executor {
 public:
  ThreadExecutor();
  ~ThreadExecutor() override;
  ThreadExecutor(const ThreadExecutor&) = delete;
  ThreadExecutor& operator=(const ThreadExecutor&) = delete;

  void submit(std::uint64_t id, std::function<void()> work, double duration) override;
  std::uint64_t wait_next() override;
  double now() const override;
  std::size_t in_flight() const override;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint64_t> done_;
  std::map<std::uint64_t, std::thread> threads_;
  std::chrono::steady_clock::time_point start_;
};

enum class ExecutorKind { Threads, Simulated };

/// Asynchronous optimizer with `workers` workers. One worker is reserved for
/// refinement evaluations. Falls back to the serial engine for one worker.
RunResult run_parallel(const ProblemSpec& spec, const OptimizerConfig& cfg, int workers, ExecutorKind executor);

}  // namespace rbfmix

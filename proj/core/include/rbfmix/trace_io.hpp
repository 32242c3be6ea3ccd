#pragma once

#include <iosfwd>
#include <string>

#include "rbfmix/engine.hpp"

namespace rbfmix {

/// CSV with header index,phase,f,best,wall_clock,x1..xN (original-space point).
void write_trace_csv(const EvaluationTrace& trace, std::ostream& out);
std::string trace_csv_string(const EvaluationTrace& trace);
/// Reads a CSV written by write_trace_csv. Extended points are not restored.
EvaluationTrace read_trace_csv(std::istream& in);

struct RunSummary {
  double best_value = 0.0;
  std::vector<double> best_point;
  int evaluations = 0;
  int restarts = 0;
  bool aborted = false;
  std::string abort_reason;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<KernelChoiceRecord> kernel_history;
};

RunSummary summarize(const RunResult& result, const OptimizerConfig& cfg);
void write_summary_json(const RunSummary& summary, std::ostream& out);
RunSummary read_summary_json(std::istream& in);

/// Writes a double so that reading it back gives the same value.
std::string format_double(double v);

}  // namespace rbfmix

#include "rbfmix/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace rbfmix {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

json kind_json(const RbfKind& k) { return {{"kernel", std::string(kernel_name(k.kernel))}, {"gamma", k.gamma}}; }

RbfKind kind_from_json(const json& j) {
  const auto kernel = parse_kernel(j.at("kernel").get<std::string>());
  if (!kernel) throw Error("unknown kernel in summary");
  return {*kernel, j.at("gamma").get<double>()};
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from_json(const json& j) { return j.is_string() ? parse_double(j.get<std::string>()) : j.get<double>(); }

}  // namespace

void write_trace_csv(const EvaluationTrace& trace, std::ostream& out) {
  const std::size_t dim = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().point.size());
  out << "index,phase,f,best,wall_clock";
  for (std::size_t i = 1; i <= dim; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.index << ',' << phase_name(r.phase) << ',' << format_double(r.f) << ',' << format_double(r.best) << ','
        << format_double(r.wall_clock);
    for (Eigen::Index i = 0; i < r.point.size(); ++i) out << ',' << format_double(r.point[i]);
    out << '\n';
  }
}

std::string trace_csv_string(const EvaluationTrace& trace) {
  std::ostringstream os;
  write_trace_csv(trace, os);
  return os.str();
}

EvaluationTrace read_trace_csv(std::istream& in) {
  EvaluationTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,phase,f,best,wall_clock", 0) != 0) {
    throw Error("trace CSV: missing header");
  }
  const std::size_t columns = split_csv(line).size();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) throw Error("trace CSV line " + std::to_string(lineno) + ": wrong column count");
    TraceRecord r;
    r.index = std::stoi(cells[0]);
    const auto phase = parse_phase(cells[1]);
    if (!phase) throw Error("trace CSV line " + std::to_string(lineno) + ": unknown phase");
    r.phase = *phase;
    r.f = parse_double(cells[2]);
    r.best = parse_double(cells[3]);
    r.wall_clock = parse_double(cells[4]);
    Eigen::VectorXd p(static_cast<Eigen::Index>(columns - 5));
    for (std::size_t i = 5; i < columns; ++i) p[static_cast<Eigen::Index>(i - 5)] = parse_double(cells[i]);
    r.point = OriginalPoint(std::move(p));
    trace.records.push_back(std::move(r));
  }
  return trace;
}

RunSummary summarize(const RunResult& result, const OptimizerConfig& cfg) {
  RunSummary s;
  s.best_value = result.best_value;
  s.best_point.assign(result.best_point.coords.data(), result.best_point.coords.data() + result.best_point.size());
  s.evaluations = result.evaluations;
  s.restarts = result.restarts;
  s.aborted = result.aborted;
  s.abort_reason = result.abort_reason;
  s.algorithm = cfg.algorithm == Algorithm::Msrsm ? "msrsm" : "gutmann";
  s.seed = cfg.seed;
  s.kernel_history = result.kernel_history;
  return s;
}

void write_summary_json(const RunSummary& s, std::ostream& out) {
  json j;
  j["best_value"] = number_json(s.best_value);
  j["best_point"] = json::array();
  for (double v : s.best_point) j["best_point"].push_back(number_json(v));
  j["evaluations"] = s.evaluations;
  j["restarts"] = s.restarts;
  j["aborted"] = s.aborted;
  if (s.aborted) j["abort_reason"] = s.abort_reason;
  j["algorithm"] = s.algorithm;
  j["seed"] = s.seed;
  j["kernel_history"] = json::array();
  for (const auto& k : s.kernel_history) {
    j["kernel_history"].push_back(
        {{"evaluations", k.evaluations}, {"local", kind_json(k.local)}, {"global", kind_json(k.global)}});
  }
  out << j.dump(2) << '\n';
}

RunSummary read_summary_json(std::istream& in) {
  const json j = json::parse(in);
  RunSummary s;
  s.best_value = number_from_json(j.at("best_value"));
  for (const auto& v : j.at("best_point")) s.best_point.push_back(number_from_json(v));
  s.evaluations = j.at("evaluations").get<int>();
  s.restarts = j.at("restarts").get<int>();
  s.aborted = j.at("aborted").get<bool>();
  s.abort_reason = j.value("abort_reason", "");
  s.algorithm = j.at("algorithm").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& k : j.at("kernel_history")) {
    s.kernel_history.push_back(
        {k.at("evaluations").get<int>(), kind_from_json(k.at("local")), kind_from_json(k.at("global"))});
  }
  return s;
}

}  // namespace rbfmix

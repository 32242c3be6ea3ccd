#include "rbfmix/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "config_json.hpp"
#include "json.hpp"
#include "rbfmix/problem_io.hpp"
#include "rbfmix/svg_plot.hpp"
#include "rbfmix/trace_io.hpp"

namespace rbfmix {

namespace {

constexpr std::uint32_t kDesignStream = 2;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string tau_tag(double tau) {
  std::ostringstream ss;
  ss << std::setprecision(3) << tau;
  return ss.str();
}

}  // namespace

bool converged(double f_x0, double f_best, double f_star, double tau) {
  const double gap = f_x0 - f_star;
  if (gap <= 0.0) return f_best <= f_x0;
  return f_x0 - f_best >= (1.0 - tau) * gap;
}

std::optional<int> solve_index(std::span<const double> curve, double f_x0, double f_star, double tau) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (converged(f_x0, curve[i], f_star, tau)) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::vector<double> median_curve(const std::vector<std::vector<double>>& curves) {
  std::size_t len = 0;
  for (const auto& c : curves) len = std::max(len, c.size());
  std::vector<double> out(len);
  std::vector<double> col;
  for (std::size_t i = 0; i < len; ++i) {
    col.clear();
    for (const auto& c : curves) {
      if (!c.empty()) col.push_back(i < c.size() ? c[i] : c.back());
    }
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    out[i] = m % 2 == 1 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
  }
  return out;
}

double shifted_geomean(std::span<const double> times) {
  if (times.empty()) throw Error("shifted_geomean of an empty set");
  double s = 0.0;
  for (double t : times) s += std::log(t + 1.0);
  return std::exp(s / static_cast<double>(times.size())) - 1.0;
}

std::vector<double> data_profile(const ProfileTable& table, std::size_t algorithm, std::span<const double> alphas) {
  std::vector<double> out;
  const double np = static_cast<double>(table.problems.size());
  for (double alpha : alphas) {
    int count = 0;
    for (std::size_t p = 0; p < table.problems.size(); ++p) {
      const auto& t = table.t[p][algorithm];
      if (t && *t / static_cast<double>(table.dims[p] + 1) <= alpha) ++count;
    }
    out.push_back(np > 0 ? count / np : 0.0);
  }
  return out;
}

std::vector<std::vector<std::optional<double>>> performance_ratios(const ProfileTable& table) {
  std::vector<std::vector<std::optional<double>>> r(table.problems.size(),
                                                     std::vector<std::optional<double>>(table.algorithms.size()));
  for (std::size_t p = 0; p < table.problems.size(); ++p) {
    std::optional<int> best;
    for (const auto& t : table.t[p]) {
      if (t && (!best || *t < *best)) best = t;
    }
    if (!best) continue;
    for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
      if (table.t[p][a]) r[p][a] = static_cast<double>(*table.t[p][a]) / std::max(*best, 1);
    }
  }
  return r;
}

std::vector<double> performance_profile(const ProfileTable& table, std::size_t algorithm,
                                        std::span<const double> alphas) {
  const auto r = performance_ratios(table);
  int solvable = 0;
  for (std::size_t p = 0; p < table.problems.size(); ++p) {
    if (std::any_of(table.t[p].begin(), table.t[p].end(), [](const auto& t) { return t.has_value(); })) ++solvable;
  }
  std::vector<double> out;
  for (double alpha : alphas) {
    int count = 0;
    for (std::size_t p = 0; p < r.size(); ++p) {
      if (r[p][algorithm] && *r[p][algorithm] <= alpha) ++count;
    }
    out.push_back(solvable > 0 ? static_cast<double>(count) / solvable : 0.0);
  }
  return out;
}

int solved_count(const ProfileTable& table, std::size_t algorithm) {
  int c = 0;
  for (const auto& row : table.t) c += row[algorithm].has_value() ? 1 : 0;
  return c;
}

void write_profile_table(const ProfileTable& table, std::ostream& out) {
  out << "# tau=" << format_double(table.tau) << "\n";
  out << "problem,n";
  for (const auto& a : table.algorithms) out << ',' << a;
  out << '\n';
  for (std::size_t p = 0; p < table.problems.size(); ++p) {
    out << table.problems[p] << ',' << table.dims[p];
    for (const auto& t : table.t[p]) {
      out << ',';
      if (t) out << *t;
    }
    out << '\n';
  }
}

ProfileTable read_profile_table(std::istream& in) {
  ProfileTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# tau=", 0) != 0) throw Error("profile table: missing tau line");
  table.tau = std::stod(line.substr(6));
  if (!std::getline(in, line)) throw Error("profile table: missing header");
  auto head = split_csv(line);
  if (head.size() < 2 || head[0] != "problem" || head[1] != "n") throw Error("profile table: bad header");
  table.algorithms.assign(head.begin() + 2, head.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != head.size()) throw Error("profile table: wrong number of cells in '" + line + "'");
    table.problems.push_back(cells[0]);
    table.dims.push_back(std::stoi(cells[1]));
    std::vector<std::optional<int>> row;
    for (std::size_t a = 2; a < cells.size(); ++a) {
      row.push_back(cells[a].empty() ? std::nullopt : std::optional<int>(std::stoi(cells[a])));
    }
    table.t.push_back(std::move(row));
  }
  return table;
}

std::vector<ExtendedPoint> shared_design(const ProblemSpec& spec, const OptimizerConfig& cfg, std::uint64_t seed) {
  OptimizerConfig c = cfg;
  c.initial_design.reset();
  Rng rng = make_rng(seed, kDesignStream);
  const int count = std::min(initial_sample_count(spec.extended_dim(), 1), c.effective_budget(spec));
  return make_initial_design(spec, c, count, rng);
}

std::vector<ExtendedPoint> to_original_space(const std::vector<ExtendedPoint>& design, const ProblemSpec& spec) {
  const ProblemSpec orig = spec.as_original_space();
  std::vector<ExtendedPoint> out;
  out.reserve(design.size());
  for (const auto& x : design) out.push_back(encode(decode(x, spec), orig));
  return out;
}

RunResult run_variant(const TestInstance& instance, const AlgorithmVariant& variant, std::uint64_t seed, int budget) {
  OptimizerConfig cfg = variant.config;
  cfg.seed = seed;
  cfg.design_seed = seed;
  cfg.budget = budget;
  const auto design = shared_design(instance.spec, cfg, seed);
  if (!variant.original_space) {
    cfg.initial_design = design;
    return run(instance.spec, cfg);
  }
  cfg.initial_design = to_original_space(design, instance.spec);
  return run(instance.spec.as_original_space(), cfg);
}

SuiteResult run_suite(const SuiteConfig& cfg) {
  if (cfg.algorithms.empty()) throw Error("suite has no algorithms");
  if (cfg.seeds < 1) throw Error("suite needs at least one seed");
  SuiteResult res;
  std::vector<TestInstance> instances;
  std::vector<std::optional<double>> known;
  for (const auto& name : cfg.instances) {
    instances.push_back(builtin(name));
    known.push_back(instances.back().known_best);
    res.instances.push_back(name);
    const int n = instances.back().spec.extended_dim();
    res.dims.push_back(n);
    res.budgets.push_back(cfg.budget.value_or(50 * (n + 1)));
  }
  for (const auto& a : cfg.algorithms) res.algorithms.push_back(a.name);
  const std::size_t P = instances.size(), A = cfg.algorithms.size(), S = static_cast<std::size_t>(cfg.seeds);
  res.runs.assign(P, std::vector<std::vector<SuiteRun>>(A, std::vector<SuiteRun>(S)));

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir / "traces");
  std::atomic<std::size_t> next{0};
  const std::size_t jobs = P * A * S;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
      const std::size_t p = j / (A * S), a = (j / S) % A, s = j % S;
      SuiteRun& out = res.runs[p][a][s];
      const std::uint64_t seed = cfg.first_seed + s;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        RunResult r = run_variant(instances[p], cfg.algorithms[a], seed, res.budgets[p]);
        out.curve = r.trace.best_curve();
        if (!cfg.out_dir.empty()) {
          std::ofstream f(cfg.out_dir / "traces" /
                          (res.instances[p] + "_" + res.algorithms[a] + "_" + std::to_string(seed) + ".csv"));
          write_trace_csv(r.trace, f);
        }
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
      }
      out.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs)));
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  compute_profiles(res, known, cfg.taus);
  if (!cfg.out_dir.empty()) write_suite_reports(res, cfg.out_dir);
  return res;
}

void compute_profiles(SuiteResult& result, const std::vector<std::optional<double>>& known_best,
                      const std::vector<double>& taus) {
  const std::size_t P = result.instances.size(), A = result.algorithms.size();
  result.curves.assign(P, std::vector<std::vector<double>>(A));
  result.f_x0.assign(P, 0.0);
  result.f_star.assign(P, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<std::vector<double>> curves;
      for (const auto& r : result.runs[p][a]) {
        if (!r.failed) curves.push_back(r.curve);
      }
      result.curves[p][a] = median_curve(curves);
      if (!result.curves[p][a].empty()) best = std::min(best, result.curves[p][a].back());
    }
    double x0 = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t a = 0; a < A && std::isnan(x0); ++a) {
      if (!result.curves[p][a].empty()) x0 = result.curves[p][a].front();
    }
    result.f_x0[p] = x0;
    result.f_star[p] = p < known_best.size() && known_best[p] ? *known_best[p] : best;
  }
  result.tables.clear();
  for (double tau : taus) {
    ProfileTable t;
    t.tau = tau;
    t.problems = result.instances;
    t.dims = result.dims;
    t.algorithms = result.algorithms;
    t.t.assign(P, std::vector<std::optional<int>>(A));
    for (std::size_t p = 0; p < P; ++p) {
      if (std::isnan(result.f_x0[p])) continue;
      for (std::size_t a = 0; a < A; ++a) {
        t.t[p][a] = solve_index(result.curves[p][a], result.f_x0[p], result.f_star[p], tau);
      }
    }
    result.tables.push_back(std::move(t));
  }
}

void write_suite_reports(const SuiteResult& result, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "profiles");
  fs::create_directories(out_dir / "curves");
  const std::size_t A = result.algorithms.size();

  for (const auto& table : result.tables) {
    const std::string tag = tau_tag(table.tau);
    {
      std::ofstream f(out_dir / "profiles" / ("table_tau" + tag + ".csv"));
      write_profile_table(table, f);
    }
    double max_alpha = 1.0;
    double max_ratio = 1.0;
    for (std::size_t p = 0; p < table.problems.size(); ++p) {
      max_alpha = std::max(max_alpha, result.budgets[p] / static_cast<double>(table.dims[p] + 1));
    }
    for (const auto& row : performance_ratios(table)) {
      for (const auto& r : row) {
        if (r) max_ratio = std::max(max_ratio, *r);
      }
    }
    std::vector<double> da, pa;
    for (int i = 0; i <= 200; ++i) da.push_back(max_alpha * i / 200.0);
    for (int i = 0; i <= 200; ++i) pa.push_back(std::pow(2.0 * max_ratio, i / 200.0));

    for (int kind = 0; kind < 2; ++kind) {
      const auto& alphas = kind == 0 ? da : pa;
      const std::string stem = (kind == 0 ? "data_profile_tau" : "performance_profile_tau") + tag;
      std::vector<PlotSeries> series;
      for (std::size_t a = 0; a < A; ++a) {
        series.push_back({result.algorithms[a], alphas,
                          kind == 0 ? data_profile(table, a, alphas) : performance_profile(table, a, alphas)});
      }
      std::ofstream csv(out_dir / "profiles" / (stem + ".csv"));
      csv << "alpha";
      for (const auto& s : series) csv << ',' << s.label;
      csv << '\n';
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        csv << format_double(alphas[i]);
        for (const auto& s : series) csv << ',' << format_double(s.y[i]);
        csv << '\n';
      }
      PlotOptions opts;
      opts.title = (kind == 0 ? "Data profile, tau = " : "Performance profile, tau = ") + tag;
      opts.x_label = kind == 0 ? "evaluations / (n + 1)" : "performance ratio";
      opts.y_label = "fraction of problems";
      opts.log_x = kind == 1;
      std::ofstream svg(out_dir / "profiles" / (stem + ".svg"));
      write_step_plot_svg(series, opts, svg);
    }
  }

  for (std::size_t p = 0; p < result.instances.size(); ++p) {
    std::ofstream f(out_dir / "curves" / (result.instances[p] + ".csv"));
    f << "evaluation";
    std::size_t len = 0;
    for (std::size_t a = 0; a < A; ++a) {
      f << ',' << result.algorithms[a];
      len = std::max(len, result.curves[p][a].size());
    }
    f << '\n';
    for (std::size_t i = 0; i < len; ++i) {
      f << i + 1;
      for (std::size_t a = 0; a < A; ++a) {
        const auto& c = result.curves[p][a];
        f << ',';
        if (!c.empty()) f << format_double(i < c.size() ? c[i] : c.back());
      }
      f << '\n';
    }
  }

  nlohmann::json j;
  j["algorithms"] = result.algorithms;
  j["problems"] = nlohmann::json::array();
  for (std::size_t p = 0; p < result.instances.size(); ++p) {
    nlohmann::json e;
    e["name"] = result.instances[p];
    e["n"] = result.dims[p];
    e["budget"] = result.budgets[p];
    e["f_x0"] = result.f_x0[p];
    e["f_star"] = result.f_star[p];
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t a = 0; a < A; ++a) {
      nlohmann::json r;
      const auto& c = result.curves[p][a];
      r["median_best"] = c.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.back());
      int failed = 0;
      double wall = 0.0;
      for (const auto& run : result.runs[p][a]) {
        failed += run.failed ? 1 : 0;
        wall += run.wall_clock;
      }
      r["failed_runs"] = failed;
      r["wall_clock_total"] = wall;
      per[result.algorithms[a]] = r;
    }
    e["results"] = per;
    j["problems"].push_back(e);
  }
  j["solved"] = nlohmann::json::array();
  for (const auto& table : result.tables) {
    nlohmann::json s;
    s["tau"] = table.tau;
    for (std::size_t a = 0; a < A; ++a) s["counts"][result.algorithms[a]] = solved_count(table, a);
    j["solved"].push_back(s);
  }
  std::ofstream f(out_dir / "summary.json");
  f << j.dump(2) << '\n';
}

SuiteConfig load_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProblemFileError("", "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProblemFileError("byte " + std::to_string(e.byte), e.what());
  }
  if (!j.is_object()) throw ProblemFileError("", "suite must be an object");
  SuiteConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "instances") {
        cfg.instances = v.get<std::vector<std::string>>();
      } else if (key == "algorithms") {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const auto& a = v[i];
          const std::string p = "algorithms[" + std::to_string(i) + "]";
          AlgorithmVariant var;
          var.name = a.value("name", "alg" + std::to_string(i + 1));
          if (a.contains("config")) detail::apply_config_json(a["config"], var.config, p + ".config");
          var.original_space = a.value("original_space", false);
          cfg.algorithms.push_back(std::move(var));
        }
      } else if (key == "seeds") {
        cfg.seeds = v.get<int>();
      } else if (key == "first_seed") {
        cfg.first_seed = v.get<std::uint64_t>();
      } else if (key == "taus") {
        cfg.taus = v.get<std::vector<double>>();
      } else if (key == "budget") {
        cfg.budget = v.get<int>();
      } else if (key == "threads") {
        cfg.threads = v.get<int>();
      } else if (key == "out") {
        cfg.out_dir = v.get<std::string>();
      } else {
        throw ProblemFileError(key, "unknown field");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProblemFileError("", e.what());
  }
  if (cfg.instances.empty()) throw ProblemFileError("instances", "expected a non-empty list");
  for (const auto& name : cfg.instances) builtin(name);
  if (cfg.algorithms.empty()) {
    AlgorithmVariant m{"msrsm", {}, false};
    AlgorithmVariant g{"gutmann", {}, false};
    g.config.algorithm = Algorithm::Gutmann;
    cfg.algorithms = {m, g};
  }
  return cfg;
}

}  // namespace rbfmix

#include "rbfmix/problem_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "config_json.hpp"
#include "json.hpp"
#include "rbfmix/testbed.hpp"

namespace rbfmix {

using nlohmann::json;

namespace {

std::string position(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
  const auto nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
  const std::size_t col = nl == std::string_view::npos ? byte : byte - nl - 1;
  return "line " + std::to_string(line) + ", column " + std::to_string(col + 1);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    std::string msg = e.what();
    if (const auto p = msg.find("- "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ProblemFileError(position(text, e.byte == 0 ? 0 : e.byte - 1), msg);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError("", "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ProblemFileError(path, "missing field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ProblemFileError(path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ProblemFileError(path, "expected an integer");
  return j.get<long long>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ProblemFileError(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ProblemFileError(path, "expected a string");
  return j.get<std::string>();
}

int positive_int(const json& j, const std::string& path) {
  const long long v = integer(j, path);
  if (v < 1 || v > 1'000'000'000) throw ProblemFileError(path, "expected a positive integer");
  return static_cast<int>(v);
}

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

}  // namespace

std::optional<LatencyModel> parse_latency(std::string_view text) {
  if (text == "none" || text.empty()) return std::nullopt;
  constexpr std::string_view head = "lognormal";
  if (text.substr(0, head.size()) != head) throw Error("latency: expected lognormal:mu,sigma,cap");
  LatencyModel m;
  std::string_view rest = text.substr(head.size());
  if (rest.empty()) return m;
  if (rest.front() != ':') throw Error("latency: expected lognormal:mu,sigma,cap");
  rest.remove_prefix(1);
  double vals[3] = {m.mu, m.sigma, m.cap};
  for (int i = 0; i < 3; ++i) {
    const auto comma = rest.find(',');
    const std::string_view tok = rest.substr(0, comma);
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), vals[i]);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw Error("latency: bad number '" + std::string(tok) + "'");
    if (comma == std::string_view::npos) {
      if (i != 2) throw Error("latency: expected three values mu,sigma,cap");
      break;
    }
    if (i == 2) throw Error("latency: expected three values mu,sigma,cap");
    rest.remove_prefix(comma + 1);
  }
  if (!(vals[1] >= 0.0) || !(vals[2] > 0.0)) throw Error("latency: need sigma >= 0 and cap > 0");
  return LatencyModel{vals[0], vals[1], vals[2]};
}

std::optional<RbfKind> parse_rbf_option(std::string_view text) {
  if (text == "auto") return std::nullopt;
  const auto k = parse_kernel(text);
  if (!k) throw Error("unknown rbf '" + std::string(text) + "'");
  return RbfKind::with_default_shape(*k);
}

namespace detail {

void apply_config_json(const json& j, OptimizerConfig& cfg, const std::string& path) {
  if (!j.is_object()) throw ProblemFileError(path, "expected an object");
  for (const auto& [key, v] : j.items()) {
    const std::string p = join(path, key);
    if (key == "algorithm") {
      const std::string s = string(v, p);
      if (s == "msrsm") {
        cfg.algorithm = Algorithm::Msrsm;
      } else if (s == "gutmann") {
        cfg.algorithm = Algorithm::Gutmann;
      } else {
        throw ProblemFileError(p, "expected \"msrsm\" or \"gutmann\"");
      }
    } else if (key == "subsolver") {
      const std::string s = string(v, p);
      if (s == "ga") {
        cfg.subsolver = SubsolverKind::Ga;
      } else if (s == "sampling") {
        cfg.subsolver = SubsolverKind::Sampling;
      } else {
        throw ProblemFileError(p, "expected \"ga\" or \"sampling\"");
      }
    } else if (key == "intensive_subsolver") {
      cfg.intensive_subsolver = boolean(v, p);
    } else if (key == "budget") {
      cfg.budget = positive_int(v, p);
    } else if (key == "wall_clock_limit") {
      cfg.wall_clock_limit = number(v, p);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(integer(v, p));
    } else if (key == "design_seed") {
      cfg.design_seed = static_cast<std::uint64_t>(integer(v, p));
    } else if (key == "rbf") {
      try {
        cfg.fixed_kernel = parse_rbf_option(string(v, p));
      } catch (const ProblemFileError&) {
        throw;
      } catch (const Error& e) {
        throw ProblemFileError(p, e.what());
      }
    } else if (key == "t_mcv") {
      cfg.t_mcv = positive_int(v, p);
    } else if (key == "refine") {
      cfg.refine_enabled = boolean(v, p);
    } else if (key == "refine_frequency") {
      cfg.refine.t_rf = positive_int(v, p);
    } else if (key == "refine_iterations") {
      cfg.refine.t_rs = positive_int(v, p);
    } else if (key == "kappa") {
      cfg.kappa = positive_int(v, p);
    } else if (key == "infstep") {
      cfg.infstep = boolean(v, p);
    } else if (key == "msrsm_variant") {
      const std::string s = string(v, p);
      if (s == "unit") {
        cfg.msrsm_variant = MsrsmVariant::UnitSecondTerm;
      } else if (s == "one_minus_alpha") {
        cfg.msrsm_variant = MsrsmVariant::OneMinusAlpha;
      } else {
        throw ProblemFileError(p, "expected \"unit\" or \"one_minus_alpha\"");
      }
    } else if (key == "clip_codomain") {
      cfg.clip_codomain = boolean(v, p);
    } else if (key == "threads") {
      cfg.threads = positive_int(v, p);
    } else if (key == "refine_fraction_cap") {
      cfg.refine_fraction_cap = number(v, p);
    } else if (key == "max_restart_failures") {
      cfg.max_restart_failures = positive_int(v, p);
    } else if (key == "simulate_latency") {
      try {
        cfg.simulated_latency = parse_latency(string(v, p));
      } catch (const ProblemFileError&) {
        throw;
      } catch (const Error& e) {
        throw ProblemFileError(p, e.what());
      }
    } else {
      throw ProblemFileError(p, "unknown setting");
    }
  }
}

}  // namespace detail

void apply_config(std::string_view json_text, OptimizerConfig& cfg) {
  detail::apply_config_json(parse_json(json_text), cfg, "");
}

OptimizerConfig load_config(const std::filesystem::path& path, OptimizerConfig base) {
  apply_config(read_file(path), base);
  return base;
}

ProblemFile parse_problem(std::string_view text) {
  const json root = parse_json(text);
  if (!root.is_object()) throw ProblemFileError("", "top level must be an object");

  std::optional<OptimizerConfig> config;
  if (const auto it = root.find("config"); it != root.end()) {
    OptimizerConfig c;
    detail::apply_config_json(*it, c, "config");
    config = c;
  }
  for (const auto& [key, v] : root.items()) {
    static const char* known[] = {"name", "instance", "variables", "objective", "config", "known_best"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ProblemFileError(key, "unknown field");
    }
  }

  if (const auto it = root.find("instance"); it != root.end()) {
    const std::string name = string(*it, "instance");
    TestInstance inst = [&] {
      try {
        return builtin(name);
      } catch (const UnknownInstanceError& e) {
        throw ProblemFileError("instance", e.what());
      }
    }();
    ProblemFile out{root.contains("name") ? string(root["name"], "name") : inst.name, inst.spec, inst.known_best, {},
                    config};
    for (int j = 0; j < inst.spec.original_dim(); ++j) out.variable_names.push_back("x" + std::to_string(j + 1));
    return out;
  }

  const json& vars = require(root, "variables", "");
  if (!vars.is_array() || vars.empty()) throw ProblemFileError("variables", "expected a non-empty array");

  struct Var {
    std::string name;
    VarKind kind;
    Bounds bounds;
    std::vector<std::string> values;
  };
  std::vector<Var> list;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string p = "variables[" + std::to_string(i) + "]";
    const json& v = vars[i];
    if (!v.is_object()) throw ProblemFileError(p, "expected an object");
    Var var;
    var.name = v.contains("name") ? string(v["name"], p + ".name") : "x" + std::to_string(i + 1);
    const std::string type = string(require(v, "type", p), p + ".type");
    if (type == "continuous" || type == "integer") {
      var.kind = type == "continuous" ? VarKind::Continuous : VarKind::Integer;
      var.bounds.lower = number(require(v, "lower", p), p + ".lower");
      var.bounds.upper = number(require(v, "upper", p), p + ".upper");
      if (!(var.bounds.lower <= var.bounds.upper)) throw ProblemFileError(p + ".upper", "upper bound below lower bound");
      if (var.kind == VarKind::Integer &&
          (var.bounds.lower != std::floor(var.bounds.lower) || var.bounds.upper != std::floor(var.bounds.upper))) {
        throw ProblemFileError(p, "integer bounds must be integers");
      }
    } else if (type == "categorical") {
      var.kind = VarKind::Categorical;
      const json& vals = require(v, "values", p);
      if (!vals.is_array() || vals.size() < 2) throw ProblemFileError(p + ".values", "expected at least two values");
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const json& e = vals[k];
        var.values.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      }
    } else {
      throw ProblemFileError(p + ".type", "expected continuous, integer or categorical");
    }
    list.push_back(std::move(var));
  }

  // Spec order: continuous, integer, categorical; file order is kept for the objective.
  std::vector<std::size_t> order(list.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return static_cast<int>(list[a].kind) < static_cast<int>(list[b].kind); });
  std::vector<Bounds> cont;
  std::vector<Bounds> ints;
  std::vector<std::vector<std::string>> cats;
  std::vector<std::string> names;
  for (std::size_t i : order) {
    const Var& v = list[i];
    names.push_back(v.name);
    if (v.kind == VarKind::Continuous) cont.push_back(v.bounds);
    if (v.kind == VarKind::Integer) ints.push_back(v.bounds);
    if (v.kind == VarKind::Categorical) cats.push_back(v.values);
  }

  const json& obj = require(root, "objective", "");
  if (!obj.is_object()) throw ProblemFileError("objective", "expected an object");
  Objective file_order;
  bool thread_safe = true;
  std::optional<double> known_best;
  if (const auto it = obj.find("builtin"); it != obj.end()) {
    const std::string name = string(*it, "objective.builtin");
    TestInstance inst = [&] {
      try {
        return builtin(name);
      } catch (const UnknownInstanceError& e) {
        throw ProblemFileError("objective.builtin", e.what());
      }
    }();
    if (inst.spec.original_dim() != static_cast<int>(list.size())) {
      throw ProblemFileError("variables", "instance '" + name + "' has " + std::to_string(inst.spec.original_dim()) +
                                              " variables");
    }
    file_order = inst.spec.objective();
    thread_safe = inst.spec.objective_thread_safe();
    known_best = inst.known_best;
  } else if (const auto cmd = obj.find("command"); cmd != obj.end()) {
    if (!cmd->is_array() || cmd->empty()) throw ProblemFileError("objective.command", "expected a non-empty array");
    std::vector<std::string> argv;
    for (std::size_t k = 0; k < cmd->size(); ++k) {
      argv.push_back(string((*cmd)[k], "objective.command[" + std::to_string(k) + "]"));
    }
    file_order = external_objective(std::move(argv));
  } else {
    throw ProblemFileError("objective", "expected \"builtin\" or \"command\"");
  }
  if (const auto it = root.find("known_best"); it != root.end()) known_best = number(*it, "known_best");

  Objective objective = [file_order, order](std::span<const double> x) {
    std::vector<double> y(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) y[order[i]] = x[i];
    return file_order(y);
  };
  try {
    ProblemSpec spec(cont, ints, cats, objective, thread_safe);
    const std::string name = root.contains("name") ? string(root["name"], "name") : "problem";
    return {name, std::move(spec), known_best, std::move(names), config};
  } catch (const InvalidSpecError& e) {
    throw ProblemFileError("variables", e.what());
  }
}

ProblemFile load_problem(const std::filesystem::path& path) { return parse_problem(read_file(path)); }

}  // namespace rbfmix

#include "rbfmix/testbed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

namespace rbfmix {

namespace testfn {

namespace {

constexpr double kPi = std::numbers::pi;

double branin_s(std::span<const double> x, double s) {
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  const double t = 1.0 / (8.0 * kPi);
  const double q = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return q * q + s * (1.0 - t) * std::cos(x[0]) + s;
}

double camel_g(std::span<const double> x, const std::function<double(double)>& g) {
  const double a = x[0] * x[0];
  const double b = x[1] * x[1];
  return (4.0 - 2.1 * a + a * a / 3.0) * a + g(x[0] * x[1]) + (-4.0 + 4.0 * b) * b;
}

double goldstein_price_k(std::span<const double> x, double k) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double a = x1 + x2 + 1.0;
  const double b = 2.0 * x1 - 3.0 * x2;
  const double p = 1.0 + a * a * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
  const double q = k + b * b * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
  return p * q;
}

template <std::size_t N>
double hartman(std::span<const double> x, const std::array<std::array<double, N>, 4>& a,
               const std::array<double, 4>& c, const std::array<std::array<double, N>, 4>& p) {
  double f = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double e = 0.0;
    for (std::size_t j = 0; j < N; ++j) e += a[i][j] * (x[j] - p[i][j]) * (x[j] - p[i][j]);
    f -= c[i] * std::exp(-e);
  }
  return f;
}

constexpr std::array<std::array<double, 3>, 4> kH3A{{{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}}};
constexpr std::array<std::array<double, 3>, 4> kH3P{
    {{0.3689, 0.117, 0.2673}, {0.4699, 0.4387, 0.747}, {0.1091, 0.8732, 0.5547}, {0.03815, 0.5743, 0.8828}}};
constexpr std::array<std::array<double, 6>, 4> kH6A{{{10, 3, 17, 3.5, 1.7, 8},
                                                     {0.05, 10, 17, 0.1, 8, 14},
                                                     {3, 3.5, 1.7, 10, 17, 8},
                                                     {17, 8, 0.05, 10, 0.1, 14}}};
constexpr std::array<std::array<double, 6>, 4> kH6P{{{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}}};
constexpr std::array<double, 4> kHartmanC{1.0, 1.2, 3.0, 3.2};

}  // namespace

double branin(std::span<const double> x) { return branin_s(x, 10.0); }

double camel(std::span<const double> x) {
  return camel_g(x, [](double t) { return t; });
}

double goldstein_price(std::span<const double> x) { return goldstein_price_k(x, 30.0); }

double hartman3(std::span<const double> x) { return hartman<3>(x, kH3A, kHartmanC, kH3P); }

double hartman6(std::span<const double> x) { return hartman<6>(x, kH6A, kHartmanC, kH6P); }

double shekel(std::span<const double> x, int m) {
  static constexpr double a[10][4] = {{4, 4, 4, 4}, {1, 1, 1, 1}, {8, 8, 8, 8}, {6, 6, 6, 6}, {3, 7, 3, 7},
                                      {2, 9, 2, 9}, {5, 5, 3, 3}, {8, 1, 8, 1}, {6, 2, 6, 2}, {7, 3.6, 7, 3.6}};
  static constexpr double c[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
  double f = 0.0;
  for (int i = 0; i < m; ++i) {
    double d = c[i];
    for (int j = 0; j < 4; ++j) d += (x[j] - a[i][j]) * (x[j] - a[i][j]);
    f -= 1.0 / d;
  }
  return f;
}

double rosenbrock(std::span<const double> x) {
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    f += 100.0 * a * a + b * b;
  }
  return f;
}

double schaffer_f7(std::span<const double> x) {
  const std::size_t n = x.size();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double s = std::sqrt(x[i] * x[i] + x[i + 1] * x[i + 1]);
    const double w = std::sin(50.0 * std::pow(s, 0.2));
    acc += std::sqrt(s) * (1.0 + w * w);
  }
  acc /= static_cast<double>(n - 1);
  return acc * acc;
}

}  // namespace testfn

namespace {

using Fn = std::function<double(std::span<const double>)>;

struct BaseDef {
  std::vector<Bounds> bounds;
  Fn f;
  double known_best;
  std::vector<double> witness;
};

const std::map<std::string, BaseDef>& bases() {
  static const std::map<std::string, BaseDef> table = [] {
    std::map<std::string, BaseDef> t;
    t["branin"] = {{{-5, 10}, {0, 15}}, testfn::branin, 0.397887357729738, {3.1415926462916817, 2.2750000239302572}};
    t["camel"] = {{{-3, 3}, {-2, 2}}, testfn::camel, -1.031628453489877, {0.08984201181742917, -0.7126564056224669}};
    t["goldsteinprice"] = {{{-2, 2}, {-2, 2}}, testfn::goldstein_price, 3.0, {0.0, -1.0}};
    t["hartman3"] = {{{0, 1}, {0, 1}, {0, 1}},
                     testfn::hartman3,
                     -3.862782147820755,
                     {0.11461432790029832, 0.5556488504420141, 0.8525469546889314}};
    t["hartman6"] = {std::vector<Bounds>(6, {0, 1}),
                     testfn::hartman6,
                     -3.322368011415515,
                     {0.20168951209480995, 0.15001069277685197, 0.476873971833793, 0.275332431065528,
                      0.3116516179851896, 0.657300535855056}};
    t["shekel5"] = {std::vector<Bounds>(4, {0, 10}),
                    [](std::span<const double> x) { return testfn::shekel(x, 5); },
                    -10.153199679058229,
                    {4.000037152376549, 4.000133278657566, 4.000037151057555, 4.000133277090425}};
    t["shekel7"] = {std::vector<Bounds>(4, {0, 10}),
                    [](std::span<const double> x) { return testfn::shekel(x, 7); },
                    -10.402940566818662,
                    {4.000572914277084, 4.000689366040889, 3.9994897107938447, 3.9996061600067923}};
    t["shekel10"] = {std::vector<Bounds>(4, {0, 10}),
                     [](std::span<const double> x) { return testfn::shekel(x, 10); },
                     -10.536409816692045,
                     {4.000746530253313, 4.000592936779709, 3.9996633957714787, 3.9995097993299975}};
    t["rbrock"] = {{{-2.048, 2.048}, {-2.048, 2.048}}, testfn::rosenbrock, 0.0, {1.0, 1.0}};
    t["schaeffer_f7_12_1"] = {std::vector<Bounds>(12, {-50, 100}), testfn::schaffer_f7, 0.0, std::vector<double>(12, 0.0)};
    t["schaeffer_f7_12_2"] = {std::vector<Bounds>(12, {-100, 30}), testfn::schaffer_f7, 0.0, std::vector<double>(12, 0.0)};
    return t;
  }();
  return table;
}

TestInstance from_base(const std::string& name, const BaseDef& d) {
  const Fn f = d.f;
  ProblemSpec spec(d.bounds, {}, {}, [f](std::span<const double> x) { return f(x); });
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(d.witness.data(), static_cast<Eigen::Index>(d.witness.size()));
  return {name, std::move(spec), d.known_best, OriginalPoint(std::move(w)), name, 1};
}

// Integer variant: the listed coordinates become integer variables on the
// integers inside their bounds; the objective is unchanged.
TestInstance integer_variant(const std::string& base_name, const std::vector<int>& int_coords,
                             std::optional<double> known_best, std::optional<std::vector<double>> witness) {
  const BaseDef& d = bases().at(base_name);
  const int n = static_cast<int>(d.bounds.size());
  std::vector<Bounds> cont;
  std::vector<Bounds> ints;
  std::vector<int> order;
  for (int j = 0; j < n; ++j) {
    if (std::find(int_coords.begin(), int_coords.end(), j) == int_coords.end()) {
      cont.push_back(d.bounds[static_cast<std::size_t>(j)]);
      order.push_back(j);
    }
  }
  for (int j : int_coords) {
    const Bounds& b = d.bounds[static_cast<std::size_t>(j)];
    ints.push_back({std::ceil(b.lower), std::floor(b.upper)});
    order.push_back(j);
  }
  const Fn f = d.f;
  // Original layout puts continuous first; restore the base coordinate order.
  auto obj = [f, order](std::span<const double> x) {
    std::vector<double> y(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) y[static_cast<std::size_t>(order[i])] = x[i];
    return f(y);
  };
  ProblemSpec spec(cont, ints, {}, obj);
  std::optional<OriginalPoint> w;
  if (witness) {
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < order.size(); ++i) v[static_cast<Eigen::Index>(i)] = (*witness)[static_cast<std::size_t>(order[i])];
    w = OriginalPoint(std::move(v));
  }
  return {base_name + "_int", std::move(spec), known_best, w, base_name + "_int", 1};
}

TestInstance int_instance(const std::string& name) {
  constexpr double kPi = std::numbers::pi;
  if (name == "branin_int") {
    const double b = 5.1 / (4.0 * kPi * kPi);
    const double c = 5.0 / kPi;
    const double x2 = 9.0 * b - 3.0 * c + 6.0;
    const std::vector<double> w{3.0, x2};
    return integer_variant("branin", {0}, testfn::branin(w), w);
  }
  if (name == "camel_int") {
    const std::vector<double> w{0.0, std::sqrt(0.5)};
    return integer_variant("camel", {0}, testfn::camel(w), w);
  }
  if (name == "goldsteinprice_int") return integer_variant("goldsteinprice", {0, 1}, 3.0, std::vector<double>{0.0, -1.0});
  if (name == "rbrock_int") return integer_variant("rbrock", {0, 1}, 0.0, std::vector<double>{1.0, 1.0});
  if (name == "schaeffer_f7_12_1_int" || name == "schaeffer_f7_12_2_int") {
    const std::string base = name.substr(0, name.size() - 4);
    return integer_variant(base, {9, 10, 11}, 0.0, std::vector<double>(12, 0.0));
  }
  throw UnknownInstanceError("unknown instance '" + name + "'");
}

CategoricalFamily family_for(const std::string& base) {
  CategoricalFamily fam;
  if (base == "branin") {
    fam.labels = {"s10", "s12", "s15"};
    fam.objective = [](std::span<const double> x, int cat) {
      static constexpr double s[] = {10.0, 12.0, 15.0};
      return testfn::branin_s(x, s[cat - 1]);
    };
    // Larger s only raises s((1 - t) cos x1 + 1) >= s t.
    fam.known_best = bases().at("branin").known_best;
  } else if (base == "camel") {
    fam.labels = {"identity", "sin", "atan"};
    fam.objective = [](std::span<const double> x, int cat) {
      if (cat == 2) return testfn::camel_g(x, [](double t) { return std::sin(t); });
      if (cat == 3) return testfn::camel_g(x, [](double t) { return std::atan(t); });
      return testfn::camel_g(x, [](double t) { return t; });
    };
  } else if (base == "goldsteinprice") {
    fam.labels = {"k30", "k36", "k45"};
    fam.objective = [](std::span<const double> x, int cat) {
      static constexpr double k[] = {30.0, 36.0, 45.0};
      return testfn::goldstein_price_k(x, k[cat - 1]);
    };
    // Both factors are positive, so a larger constant raises the product.
    fam.known_best = 3.0;
  } else if (base == "hartman3" || base == "hartman6") {
    fam.labels = {"c1", "c2", "c3"};
    const bool six = base == "hartman6";
    fam.objective = [six](std::span<const double> x, int cat) {
      static constexpr std::array<std::array<double, 4>, 3> cs{
          {{1.0, 1.2, 3.0, 3.2}, {1.2, 1.0, 3.2, 3.0}, {3.2, 3.0, 1.2, 1.0}}};
      const auto& c = cs[static_cast<std::size_t>(cat - 1)];
      return six ? testfn::hartman<6>(x, testfn::kH6A, c, testfn::kH6P)
                 : testfn::hartman<3>(x, testfn::kH3A, c, testfn::kH3P);
    };
  } else {
    throw UnknownInstanceError("no categorical variant of '" + base + "'");
  }
  return fam;
}

std::uint64_t name_seed(std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [name, def] : bases()) out.push_back(name);
  for (const char* s : {"branin_int", "camel_int", "goldsteinprice_int", "rbrock_int", "schaeffer_f7_12_1_int",
                        "schaeffer_f7_12_2_int", "branin_cat", "camel_cat", "goldsteinprice_cat", "hartman3_cat",
                        "hartman6_cat"}) {
    out.emplace_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TestInstance builtin(std::string_view name) {
  const std::string key(name);
  if (const auto at = key.find("@s"); at != std::string::npos) {
    const std::string base = key.substr(0, at);
    const std::string mult = key.substr(at + 2);
    int s = 0;
    try {
      std::size_t used = 0;
      s = std::stoi(mult, &used);
      if (used != mult.size()) s = 0;
    } catch (const std::exception&) {
      s = 0;
    }
    if (s < 2) throw UnknownInstanceError("bad multiplier in '" + key + "'");
    Rng rng = make_rng(name_seed(key));
    TestInstance out = enlarge(builtin(base), s, rng);
    out.name = key;
    return out;
  }
  if (const auto it = bases().find(key); it != bases().end()) return from_base(key, it->second);
  if (key.size() > 4 && key.ends_with("_cat")) {
    const std::string base = key.substr(0, key.size() - 4);
    if (bases().count(base) != 0) return make_categorical_variant(builtin(base), family_for(base));
  }
  if (key.size() > 4 && key.ends_with("_int")) return int_instance(key);
  throw UnknownInstanceError("unknown instance '" + key + "'");
}

TestInstance make_categorical_variant(const TestInstance& base, const CategoricalFamily& family) {
  const ProblemSpec& b = base.spec;
  if (family.labels.size() < 3) throw InvalidSpecError("categorical variant needs at least three values");
  std::vector<Bounds> cont;
  std::vector<Bounds> ints;
  for (int j = 0; j < b.n_continuous(); ++j) cont.push_back(b.bounds(j));
  for (int j = b.n_continuous(); j < b.n_continuous() + b.n_integer(); ++j) ints.push_back(b.bounds(j));
  std::vector<std::vector<std::string>> cats;
  for (int h = 0; h < b.n_categorical(); ++h) cats.push_back(b.category_labels(h));
  cats.push_back(family.labels);
  const int numeric = b.n_continuous() + b.n_integer();
  const auto fn = family.objective;
  const int last = b.original_dim();
  auto obj = [fn, numeric, last](std::span<const double> x) {
    return fn(x.first(static_cast<std::size_t>(numeric)), static_cast<int>(std::lround(x[static_cast<std::size_t>(last)])));
  };
  TestInstance out{base.name + family.suffix, ProblemSpec(cont, ints, cats, obj), family.known_best, std::nullopt,
                   base.name + family.suffix, 1};
  if (family.known_best && base.witness && base.known_best && *family.known_best == *base.known_best) {
    Eigen::VectorXd w(last + 1);
    w.head(last) = base.witness->coords;
    w[last] = 1.0;
    out.witness = OriginalPoint(std::move(w));
  }
  return out;
}

TestInstance enlarge(const TestInstance& base, int s, Rng& rng) {
  if (s < 2) throw Error("enlarge: multiplier must be at least 2");
  if (!base.witness || !base.known_best) throw Error("enlarge: base instance needs a witness and known optimum");
  const ProblemSpec& b = base.spec;
  const int nc = b.n_continuous();
  const int ni = b.n_integer();
  const int nk = b.n_categorical();
  const int nn = nc + ni;
  const int n = nn + nk;

  // Position of base coordinate j of copy i in the enlarged original vector.
  std::vector<int> perm_c(static_cast<std::size_t>(s * nc));
  std::vector<int> perm_i(static_cast<std::size_t>(s * ni));
  std::vector<int> perm_k(static_cast<std::size_t>(s * nk));
  std::iota(perm_c.begin(), perm_c.end(), 0);
  std::iota(perm_i.begin(), perm_i.end(), 0);
  std::iota(perm_k.begin(), perm_k.end(), 0);
  std::shuffle(perm_c.begin(), perm_c.end(), rng);
  std::shuffle(perm_i.begin(), perm_i.end(), rng);
  std::shuffle(perm_k.begin(), perm_k.end(), rng);
  std::vector<int> pos(static_cast<std::size_t>(s * n));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < n; ++j) {
      int p = 0;
      if (j < nc) {
        p = perm_c[static_cast<std::size_t>(i * nc + j)];
      } else if (j < nn) {
        p = s * nc + perm_i[static_cast<std::size_t>(i * ni + j - nc)];
      } else {
        p = s * nn + perm_k[static_cast<std::size_t>(i * nk + j - nn)];
      }
      pos[static_cast<std::size_t>(i * n + j)] = p;
    }
  }

  // Random partition of the numeric enlarged variables into nn nonempty groups.
  std::vector<int> numeric_vars;  // (copy, base coord) flattened as i * n + j
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < nn; ++j) numeric_vars.push_back(i * n + j);
  }
  std::shuffle(numeric_vars.begin(), numeric_vars.end(), rng);
  std::vector<std::vector<std::pair<int, double>>> groups(static_cast<std::size_t>(nn));
  std::uniform_real_distribution<double> coef(0.5, 1.5);
  std::uniform_int_distribution<int> which(0, std::max(0, nn - 1));
  for (std::size_t t = 0; t < numeric_vars.size(); ++t) {
    const int g = t < static_cast<std::size_t>(nn) ? static_cast<int>(t) : which(rng);
    groups[static_cast<std::size_t>(g)].push_back({numeric_vars[t], coef(rng)});
  }

  std::vector<double> c(static_cast<std::size_t>(s + 1));
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  for (double& v : c) v = weight(rng);
  const double total = std::accumulate(c.begin(), c.end(), 0.0);
  for (double& v : c) v /= total;

  // Affine map of each group's attainable range onto the coordinate's domain,
  // anchored so the witness sums land on the witness coordinates.
  const Eigen::VectorXd& w = base.witness->coords;
  struct Map {
    double anchor_in;
    double anchor_out;
    double slope;
  };
  std::vector<Map> maps(static_cast<std::size_t>(nn));
  for (int g = 0; g < nn; ++g) {
    double lo = 0.0;
    double hi = 0.0;
    double at = 0.0;
    for (const auto& [var, a] : groups[static_cast<std::size_t>(g)]) {
      const int j = var % n;
      lo += a * b.bounds(j).lower;
      hi += a * b.bounds(j).upper;
      at += a * w[j];
    }
    const Bounds& dom = b.bounds(g);
    const double slope = hi > lo ? (dom.upper - dom.lower) / (hi - lo) : 0.0;
    maps[static_cast<std::size_t>(g)] = {at, w[g], slope};
  }

  auto base_spec = std::make_shared<const ProblemSpec>(b);
  auto obj = [base_spec, s, n, nn, nc, pos, groups, maps, c](std::span<const double> x) {
    double f = 0.0;
    Eigen::VectorXd y(n);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < n; ++j) y[j] = x[static_cast<std::size_t>(pos[static_cast<std::size_t>(i * n + j)])];
      f += c[static_cast<std::size_t>(i)] * base_spec->evaluate(OriginalPoint(y));
    }
    for (int g = 0; g < nn; ++g) {
      double sum = 0.0;
      for (const auto& [var, a] : groups[static_cast<std::size_t>(g)]) {
        sum += a * x[static_cast<std::size_t>(pos[static_cast<std::size_t>(var)])];
      }
      const Map& m = maps[static_cast<std::size_t>(g)];
      const Bounds& dom = base_spec->bounds(g);
      double v = std::clamp(m.anchor_out + m.slope * (sum - m.anchor_in), dom.lower, dom.upper);
      if (g >= nc) v = std::clamp(std::round(v), std::ceil(dom.lower), std::floor(dom.upper));
      y[g] = v;
    }
    for (int j = nn; j < n; ++j) y[j] = x[static_cast<std::size_t>(pos[static_cast<std::size_t>(j)])];
    f += c[static_cast<std::size_t>(s)] * base_spec->evaluate(OriginalPoint(y));
    return f;
  };

  std::vector<Bounds> cont_p(static_cast<std::size_t>(s * nc));
  std::vector<Bounds> ints_p(static_cast<std::size_t>(s * ni));
  std::vector<std::vector<std::string>> cats_p(static_cast<std::size_t>(s * nk));
  Eigen::VectorXd wx(s * n);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < n; ++j) {
      const int p = pos[static_cast<std::size_t>(i * n + j)];
      wx[p] = w[j];
      if (j < nc) {
        cont_p[static_cast<std::size_t>(p)] = b.bounds(j);
      } else if (j < nn) {
        ints_p[static_cast<std::size_t>(p - s * nc)] = b.bounds(j);
      } else {
        cats_p[static_cast<std::size_t>(p - s * nn)] = b.category_labels(j - nn);
      }
    }
  }

  TestInstance out{base.name + "@s" + std::to_string(s),
                   ProblemSpec(cont_p, ints_p, cats_p, obj, b.objective_thread_safe()),
                   base.known_best,
                   OriginalPoint(wx),
                   base.name,
                   s};
  const double fw = out.spec.evaluate(*out.witness);
  if (!(std::abs(fw - *base.known_best) <= 1e-6 * std::max(1.0, std::abs(*base.known_best)))) {
    throw Error("enlarge: witness check failed for " + out.name);
  }
  return out;
}

}  // namespace rbfmix

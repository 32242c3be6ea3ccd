#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbfmix/problem.hpp"

namespace rbfmix {

class UnknownInstanceError : public Error {
 public:
  using Error::Error;
};

struct TestInstance {
  std::string name;
  ProblemSpec spec;
  std::optional<double> known_best;
  /// A point attaining known_best (original coordinates).
  std::optional<OriginalPoint> witness;
  std::string base_name;
  int multiplier = 1;
};

/// Names accepted by builtin(), without the enlarged `name@sK` forms.
std::vector<std::string> builtin_names();

/// Looks up `name`, `name_int`, `name_cat`, or `name@sK` (enlarged K times
/// with a fixed per-name seed). Throws UnknownInstanceError.
TestInstance builtin(std::string_view name);

/// Adds one categorical variable whose value selects a member of a family
/// of objectives; category 1 must reproduce the base objective.
struct CategoricalFamily {
  std::string suffix = "_cat";
  std::vector<std::string> labels;
  /// (numeric coordinates of the base point, category index in [1, m]).
  std::function<double(std::span<const double>, int)> objective;
  std::optional<double> known_best;
};

TestInstance make_categorical_variant(const TestInstance& base, const CategoricalFamily& family);

/// Sum of s weighted copies of the base objective on disjoint variable
/// blocks plus one copy on affine images of random linear combinations of
/// all numeric variables. Variables are permuted within each type group.
/// Requires a witness; the witness of the result is verified before return.
TestInstance enlarge(const TestInstance& base, int s, Rng& rng);

namespace testfn {

double branin(std::span<const double> x);
double camel(std::span<const double> x);
double goldstein_price(std::span<const double> x);
double hartman3(std::span<const double> x);
double hartman6(std::span<const double> x);
double shekel(std::span<const double> x, int m);
double rosenbrock(std::span<const double> x);
double schaffer_f7(std::span<const double> x);

}  // namespace testfn

}  // namespace rbfmix

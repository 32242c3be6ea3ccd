#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rbfmix {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream).
Rng make_rng(std::uint64_t seed, std::uint32_t stream = 0);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

class InvalidPointError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Black-box objective over original-space coordinates: continuous values,
/// then integer values, then categorical indices in [1, m_h].
using Objective = std::function<double(std::span<const double>)>;

enum class VarKind { Continuous, Integer, Categorical };

/// Point in the original space: one coordinate per variable, categoricals as
/// 1-based indices into their value set.
struct OriginalPoint {
  Eigen::VectorXd coords;

  OriginalPoint() = default;
  explicit OriginalPoint(Eigen::VectorXd c) : coords(std::move(c)) {}
  OriginalPoint(std::initializer_list<double> c);

  Eigen::Index size() const { return coords.size(); }
  double operator[](Eigen::Index i) const { return coords[i]; }
  bool operator==(const OriginalPoint& other) const {
    return coords.size() == other.coords.size() && coords == other.coords;
  }
};

/// Point in the extended space: continuous and integer coordinates in native
/// units followed by the unary (one-hot) blocks of the categorical variables.
/// Categoricals with exactly two values occupy a single 0/1 slot.
struct ExtendedPoint {
  Eigen::VectorXd coords;

  ExtendedPoint() = default;
  explicit ExtendedPoint(Eigen::VectorXd c) : coords(std::move(c)) {}
  ExtendedPoint(std::initializer_list<double> c);

  Eigen::Index size() const { return coords.size(); }
  double operator[](Eigen::Index i) const { return coords[i]; }
  bool operator==(const ExtendedPoint& other) const {
    return coords.size() == other.coords.size() && coords == other.coords;
  }
};

/// Mixed-variable box-constrained problem. Immutable once built.
class ProblemSpec {
 public:
  ProblemSpec(std::vector<Bounds> continuous, std::vector<Bounds> integer,
              std::vector<std::vector<std::string>> categorical, Objective objective,
              bool objective_thread_safe = true);

  int n_continuous() const { return n_continuous_; }
  int n_integer() const { return n_integer_; }
  int n_categorical() const { return static_cast<int>(categories_.size()); }
  /// n_r + n_d + n_c
  int original_dim() const { return n_continuous_ + n_integer_ + n_categorical(); }
  /// n_r + n_d + sum of block widths
  int extended_dim() const { return extended_dim_; }

  /// Bounds of continuous/integer variable j (j < n_r + n_d).
  const Bounds& bounds(int j) const { return bounds_.at(static_cast<std::size_t>(j)); }
  int category_count(int h) const { return static_cast<int>(categories_.at(static_cast<std::size_t>(h)).size()); }
  const std::vector<std::string>& category_labels(int h) const { return categories_.at(static_cast<std::size_t>(h)); }
  bool is_binary(int h) const { return category_count(h) == 2; }
  int block_offset(int h) const { return block_offsets_.at(static_cast<std::size_t>(h)); }
  int block_width(int h) const { return is_binary(h) ? 1 : category_count(h); }

  VarKind original_kind(int j) const;
  VarKind slot_kind(int slot) const;
  /// Extended-space slots whose tail columns are removed in the reduced
  /// interpolation system: the last slot of every non-binary unary block.
  const std::vector<int>& eliminated_columns() const { return eliminated_; }

  Eigen::VectorXd extended_lower() const;
  Eigen::VectorXd extended_upper() const;
  Eigen::VectorXd original_lower() const;
  Eigen::VectorXd original_upper() const;

  double evaluate(const OriginalPoint& p) const;
  const Objective& objective() const { return objective_; }
  bool objective_thread_safe() const { return objective_thread_safe_; }

  /// Same problem with each categorical variable replaced by an integer
  /// variable on [1, m_h]; the objective is unchanged.
  ProblemSpec as_original_space() const;
  ProblemSpec with_objective(Objective objective, bool thread_safe) const;

  /// Affine map of continuous/integer coordinates onto [0, 1]; unary slots
  /// are left untouched.
  Eigen::VectorXd to_unit(const ExtendedPoint& x) const;
  /// Inverse of to_unit. Integer coordinates snap to the nearest integer.
  ExtendedPoint from_unit(const Eigen::VectorXd& u) const;
  /// Width of the native range of slot i (1 for unary slots and fixed variables).
  double unit_scale(int slot) const;

 private:
  int n_continuous_ = 0;
  int n_integer_ = 0;
  int extended_dim_ = 0;
  std::vector<Bounds> bounds_;
  std::vector<std::vector<std::string>> categories_;
  std::vector<int> block_offsets_;
  std::vector<int> eliminated_;
  Objective objective_;
  bool objective_thread_safe_ = true;
};

ExtendedPoint encode(const OriginalPoint& p, const ProblemSpec& spec);
OriginalPoint decode(const ExtendedPoint& x, const ProblemSpec& spec);

/// Throws InvalidPointError when p violates bounds or integrality.
void validate(const OriginalPoint& p, const ProblemSpec& spec);

OriginalPoint sample_uniform_original(const ProblemSpec& spec, Rng& rng);
std::vector<ExtendedPoint> sample_uniform(const ProblemSpec& spec, std::size_t count, Rng& rng);

/// Euclidean distance in the extended space.
double distance(const ExtendedPoint& a, const ExtendedPoint& b);

}  // namespace rbfmix

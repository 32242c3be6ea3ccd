#include "rbfmix/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rbfmix {

namespace {

constexpr double kIntegralTol = 1e-9;

bool is_integral(double v) { return std::abs(v - std::round(v)) <= kIntegralTol; }

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

OriginalPoint::OriginalPoint(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
  Eigen::Index i = 0;
  for (double v : c) coords[i++] = v;
}

ExtendedPoint::ExtendedPoint(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
  Eigen::Index i = 0;
  for (double v : c) coords[i++] = v;
}

ProblemSpec::ProblemSpec(std::vector<Bounds> continuous, std::vector<Bounds> integer,
                         std::vector<std::vector<std::string>> categorical, Objective objective,
                         bool objective_thread_safe)
    : n_continuous_(static_cast<int>(continuous.size())),
      n_integer_(static_cast<int>(integer.size())),
      categories_(std::move(categorical)),
      objective_(std::move(objective)),
      objective_thread_safe_(objective_thread_safe) {
  bounds_ = std::move(continuous);
  bounds_.insert(bounds_.end(), integer.begin(), integer.end());
  for (std::size_t j = 0; j < bounds_.size(); ++j) {
    const Bounds& b = bounds_[j];
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper)) {
      throw InvalidSpecError("variable " + std::to_string(j) + ": bounds must be finite");
    }
    if (b.lower > b.upper) {
      throw InvalidSpecError("variable " + std::to_string(j) + ": lower bound exceeds upper bound");
    }
    if (static_cast<int>(j) >= n_continuous_ && (!is_integral(b.lower) || !is_integral(b.upper))) {
      throw InvalidSpecError("integer variable " + std::to_string(j) + ": bounds must be integral");
    }
  }
  int offset = n_continuous_ + n_integer_;
  for (std::size_t h = 0; h < categories_.size(); ++h) {
    if (categories_[h].size() < 2) {
      throw InvalidSpecError("categorical variable " + std::to_string(h) + ": needs at least two values");
    }
    block_offsets_.push_back(offset);
    const int width = is_binary(static_cast<int>(h)) ? 1 : static_cast<int>(categories_[h].size());
    if (width > 1) eliminated_.push_back(offset + width - 1);
    offset += width;
  }
  extended_dim_ = offset;
  if (original_dim() == 0) throw InvalidSpecError("problem has no variables");
}

VarKind ProblemSpec::original_kind(int j) const {
  if (j < n_continuous_) return VarKind::Continuous;
  if (j < n_continuous_ + n_integer_) return VarKind::Integer;
  return VarKind::Categorical;
}

VarKind ProblemSpec::slot_kind(int slot) const {
  if (slot < n_continuous_) return VarKind::Continuous;
  if (slot < n_continuous_ + n_integer_) return VarKind::Integer;
  return VarKind::Categorical;
}

Eigen::VectorXd ProblemSpec::extended_lower() const {
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(extended_dim_);
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) lo[j] = bounds_[static_cast<std::size_t>(j)].lower;
  return lo;
}

Eigen::VectorXd ProblemSpec::extended_upper() const {
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(extended_dim_);
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) hi[j] = bounds_[static_cast<std::size_t>(j)].upper;
  return hi;
}

Eigen::VectorXd ProblemSpec::original_lower() const {
  Eigen::VectorXd lo = Eigen::VectorXd::Ones(original_dim());
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) lo[j] = bounds_[static_cast<std::size_t>(j)].lower;
  return lo;
}

Eigen::VectorXd ProblemSpec::original_upper() const {
  Eigen::VectorXd hi(original_dim());
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) hi[j] = bounds_[static_cast<std::size_t>(j)].upper;
  for (int h = 0; h < n_categorical(); ++h) hi[n_continuous_ + n_integer_ + h] = category_count(h);
  return hi;
}

double ProblemSpec::evaluate(const OriginalPoint& p) const {
  if (p.size() != original_dim()) throw DimensionMismatchError("evaluate: wrong point dimension");
  return objective_(std::span<const double>(p.coords.data(), static_cast<std::size_t>(p.size())));
}

ProblemSpec ProblemSpec::as_original_space() const {
  std::vector<Bounds> cont(bounds_.begin(), bounds_.begin() + n_continuous_);
  std::vector<Bounds> ints(bounds_.begin() + n_continuous_, bounds_.end());
  for (int h = 0; h < n_categorical(); ++h) ints.push_back({1.0, static_cast<double>(category_count(h))});
  return ProblemSpec(std::move(cont), std::move(ints), {}, objective_, objective_thread_safe_);
}

ProblemSpec ProblemSpec::with_objective(Objective objective, bool thread_safe) const {
  ProblemSpec copy = *this;
  copy.objective_ = std::move(objective);
  copy.objective_thread_safe_ = thread_safe;
  return copy;
}

double ProblemSpec::unit_scale(int slot) const {
  if (slot >= n_continuous_ + n_integer_) return 1.0;
  const Bounds& b = bounds_[static_cast<std::size_t>(slot)];
  const double w = b.upper - b.lower;
  return w > 0.0 ? w : 1.0;
}

Eigen::VectorXd ProblemSpec::to_unit(const ExtendedPoint& x) const {
  if (x.size() != extended_dim_) throw DimensionMismatchError("to_unit: wrong point dimension");
  Eigen::VectorXd u = x.coords;
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) {
    const Bounds& b = bounds_[static_cast<std::size_t>(j)];
    u[j] = b.upper > b.lower ? (x.coords[j] - b.lower) / (b.upper - b.lower) : 0.0;
  }
  return u;
}

ExtendedPoint ProblemSpec::from_unit(const Eigen::VectorXd& u) const {
  if (u.size() != extended_dim_) throw DimensionMismatchError("from_unit: wrong point dimension");
  Eigen::VectorXd x = u;
  for (int j = 0; j < n_continuous_ + n_integer_; ++j) {
    const Bounds& b = bounds_[static_cast<std::size_t>(j)];
    double v = b.lower + u[j] * (b.upper - b.lower);
    if (j >= n_continuous_) v = std::round(v);
    x[j] = std::clamp(v, b.lower, b.upper);
  }
  return ExtendedPoint(std::move(x));
}

void validate(const OriginalPoint& p, const ProblemSpec& spec) {
  if (p.size() != spec.original_dim()) {
    throw InvalidPointError("point has dimension " + std::to_string(p.size()) + ", expected " +
                            std::to_string(spec.original_dim()));
  }
  const int nb = spec.n_continuous() + spec.n_integer();
  for (int j = 0; j < nb; ++j) {
    const Bounds& b = spec.bounds(j);
    const double v = p[j];
    if (!std::isfinite(v) || v < b.lower || v > b.upper) {
      throw InvalidPointError("coordinate " + std::to_string(j) + " out of bounds");
    }
    if (j >= spec.n_continuous() && !is_integral(v)) {
      throw InvalidPointError("integer coordinate " + std::to_string(j) + " is fractional");
    }
  }
  for (int h = 0; h < spec.n_categorical(); ++h) {
    const double v = p[nb + h];
    if (!is_integral(v) || v < 1.0 || v > spec.category_count(h)) {
      throw InvalidPointError("categorical " + std::to_string(h) + ": index out of [1, " +
                              std::to_string(spec.category_count(h)) + "]");
    }
  }
}

ExtendedPoint encode(const OriginalPoint& p, const ProblemSpec& spec) {
  validate(p, spec);
  const int nb = spec.n_continuous() + spec.n_integer();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.extended_dim());
  x.head(nb) = p.coords.head(nb);
  for (int j = spec.n_continuous(); j < nb; ++j) x[j] = std::round(x[j]);
  for (int h = 0; h < spec.n_categorical(); ++h) {
    const int index = static_cast<int>(std::lround(p[nb + h]));
    if (spec.is_binary(h)) {
      x[spec.block_offset(h)] = index == 2 ? 1.0 : 0.0;
    } else {
      x[spec.block_offset(h) + index - 1] = 1.0;
    }
  }
  return ExtendedPoint(std::move(x));
}

OriginalPoint decode(const ExtendedPoint& x, const ProblemSpec& spec) {
  if (x.size() != spec.extended_dim()) {
    throw DimensionMismatchError("decode: point has dimension " + std::to_string(x.size()) + ", expected " +
                                 std::to_string(spec.extended_dim()));
  }
  const int nb = spec.n_continuous() + spec.n_integer();
  Eigen::VectorXd p(spec.original_dim());
  p.head(nb) = x.coords.head(nb);
  for (int h = 0; h < spec.n_categorical(); ++h) {
    const int off = spec.block_offset(h);
    if (spec.is_binary(h)) {
      const double v = x[off];
      if (std::abs(v) > kIntegralTol && std::abs(v - 1.0) > kIntegralTol) {
        throw InvalidPointError("categorical " + std::to_string(h) + ": binary slot is not 0/1");
      }
      p[nb + h] = v > 0.5 ? 2.0 : 1.0;
      continue;
    }
    int chosen = -1;
    double sum = 0.0;
    for (int i = 0; i < spec.block_width(h); ++i) {
      const double v = x[off + i];
      sum += v;
      if (std::abs(v - 1.0) <= kIntegralTol) {
        chosen = i;
      } else if (std::abs(v) > kIntegralTol) {
        throw InvalidPointError("categorical " + std::to_string(h) + ": unary slot is not 0/1");
      }
    }
    if (chosen < 0 || std::abs(sum - 1.0) > kIntegralTol) {
      throw InvalidPointError("categorical " + std::to_string(h) + ": unary block does not sum to 1");
    }
    p[nb + h] = chosen + 1;
  }
  OriginalPoint out(std::move(p));
  validate(out, spec);
  return out;
}

OriginalPoint sample_uniform_original(const ProblemSpec& spec, Rng& rng) {
  Eigen::VectorXd p(spec.original_dim());
  for (int j = 0; j < spec.n_continuous(); ++j) {
    const Bounds& b = spec.bounds(j);
    p[j] = std::uniform_real_distribution<double>(b.lower, b.upper)(rng);
  }
  for (int j = spec.n_continuous(); j < spec.n_continuous() + spec.n_integer(); ++j) {
    const Bounds& b = spec.bounds(j);
    p[j] = static_cast<double>(std::uniform_int_distribution<long long>(std::llround(b.lower),
                                                                        std::llround(b.upper))(rng));
  }
  const int nb = spec.n_continuous() + spec.n_integer();
  for (int h = 0; h < spec.n_categorical(); ++h) {
    p[nb + h] = static_cast<double>(std::uniform_int_distribution<int>(1, spec.category_count(h))(rng));
  }
  return OriginalPoint(std::move(p));
}

std::vector<ExtendedPoint> sample_uniform(const ProblemSpec& spec, std::size_t count, Rng& rng) {
  std::vector<ExtendedPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(encode(sample_uniform_original(spec, rng), spec));
  return out;
}

double distance(const ExtendedPoint& a, const ExtendedPoint& b) {
  if (a.size() != b.size()) throw DimensionMismatchError("distance: dimension mismatch");
  return (a.coords - b.coords).norm();
}

}  // namespace rbfmix

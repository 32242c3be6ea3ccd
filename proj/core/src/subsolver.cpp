#include "rbfmix/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rbfmix {

namespace {

// One original variable: its slot range in the extended space.
struct Segment {
  int offset;
  int width;
  VarKind kind;
  double grid_max;  // number of integer steps for integer variables
};

std::vector<Segment> segments(const ProblemSpec& spec) {
  std::vector<Segment> segs;
  for (int j = 0; j < spec.n_continuous(); ++j) segs.push_back({j, 1, VarKind::Continuous, 0.0});
  for (int j = spec.n_continuous(); j < spec.n_continuous() + spec.n_integer(); ++j) {
    const Bounds& b = spec.bounds(j);
    segs.push_back({j, 1, VarKind::Integer, b.upper - b.lower});
  }
  for (int h = 0; h < spec.n_categorical(); ++h) {
    segs.push_back({spec.block_offset(h), spec.block_width(h), VarKind::Categorical, 0.0});
  }
  return segs;
}

void draw_segment(Eigen::MatrixXd& m, Eigen::Index r, const Segment& s, Rng& rng) {
  auto row = m.row(r);
  switch (s.kind) {
    case VarKind::Continuous:
      row[s.offset] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      break;
    case VarKind::Integer: {
      const auto steps = static_cast<long long>(std::llround(s.grid_max));
      const auto v = std::uniform_int_distribution<long long>(0, steps)(rng);
      row[s.offset] = steps > 0 ? static_cast<double>(v) / static_cast<double>(steps) : 0.0;
      break;
    }
    case VarKind::Categorical: {
      row.segment(s.offset, s.width).setZero();
      if (s.width == 1) {
        row[s.offset] = std::uniform_int_distribution<int>(0, 1)(rng);
      } else {
        row[s.offset + std::uniform_int_distribution<int>(0, s.width - 1)(rng)] = 1.0;
      }
      break;
    }
  }
}

std::vector<int> rank_order(const Eigen::VectorXd& scores) {
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int i) {
    const double v = scores[i];
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
  return idx;
}

void track_best(const Eigen::MatrixXd& pop, const Eigen::VectorXd& scores, SubsolverResult& res) {
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] < res.value) {
      res.value = scores[i];
      res.best = pop.row(i).transpose();
    }
  }
}

}  // namespace

Eigen::MatrixXd sample_unit(const ProblemSpec& spec, int count, Rng& rng) {
  const auto segs = segments(spec);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(std::max(0, count), spec.extended_dim());
  for (int i = 0; i < count; ++i) {
    for (const Segment& s : segs) draw_segment(rows, i, s, rng);
  }
  return rows;
}

GaSplit ga_split(int size) {
  GaSplit split;
  split.survivors = static_cast<int>(std::lround(0.25 * size));
  split.offspring = static_cast<int>(std::lround(0.25 * size));
  split.mutants = 1;
  split.random = size - split.survivors - split.offspring - split.mutants;
  return split;
}

Eigen::MatrixXd ga_next_population(const Eigen::MatrixXd& current, const Eigen::VectorXd& scores,
                                   const ProblemSpec& spec, int mutation_age, Rng& rng) {
  const int size = static_cast<int>(current.rows());
  if (size < 4) throw Error("ga_next_population: population must have at least 4 individuals");
  const auto segs = segments(spec);
  const GaSplit split = ga_split(size);
  const std::vector<int> order = rank_order(scores);

  Eigen::MatrixXd next(size, current.cols());
  int row = 0;
  for (int i = 0; i < split.survivors; ++i) next.row(row++) = current.row(order[static_cast<std::size_t>(i)]);

  std::uniform_int_distribution<int> pick(0, split.survivors - 1);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < split.offspring; ++i) {
    const int a = pick(rng);
    int b = pick(rng);
    if (split.survivors > 1) {
      while (b == a) b = pick(rng);
    }
    for (const Segment& s : segs) {
      const int parent = coin(rng) ? a : b;
      next.row(row).segment(s.offset, s.width) = next.row(parent).segment(s.offset, s.width);
    }
    ++row;
  }

  next.row(row) = current.row(order.front());
  const int perturbed = std::min<int>(static_cast<int>(segs.size()), 1 + std::max(0, mutation_age));
  std::vector<int> which(segs.size());
  std::iota(which.begin(), which.end(), 0);
  std::shuffle(which.begin(), which.end(), rng);
  const double half_width = 0.1 * std::exp2(-mutation_age / 5.0);
  for (int t = 0; t < perturbed; ++t) {
    const Segment& s = segs[static_cast<std::size_t>(which[static_cast<std::size_t>(t)])];
    if (s.kind == VarKind::Continuous) {
      const double noise = std::uniform_real_distribution<double>(-half_width, half_width)(rng);
      next(row, s.offset) = std::clamp(next(row, s.offset) + noise, 0.0, 1.0);
    } else {
      draw_segment(next, row, s, rng);
    }
  }
  ++row;

  if (split.random > 0) next.bottomRows(split.random) = sample_unit(spec, split.random, rng);
  return next;
}

SubsolverResult ga_minimize(const BatchObjective& objective, const ProblemSpec& spec, const GaConfig& cfg, Rng& rng) {
  const int size = cfg.population(spec.extended_dim());
  if (size < 4 || cfg.iterations < 1) throw Error("ga_minimize: invalid configuration");
  SubsolverResult res;
  res.value = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd pop = sample_unit(spec, size, rng);
  Eigen::VectorXd scores = objective(pop);
  res.best = pop.row(0).transpose();
  track_best(pop, scores, res);
  for (int it = 0; it < cfg.iterations; ++it) {
    pop = ga_next_population(pop, scores, spec, it, rng);
    scores = objective(pop);
    track_best(pop, scores, res);
  }
  res.population = std::move(pop);
  res.scores = std::move(scores);
  return res;
}

SubsolverResult sample_minimize(const BatchObjective& objective, const ProblemSpec& spec, const SamplingConfig& cfg,
                                Rng& rng) {
  if (cfg.samples_per_dimension < 1) throw Error("sample_minimize: samples_per_dimension must be >= 1");
  SubsolverResult res;
  res.value = std::numeric_limits<double>::infinity();
  res.population = sample_unit(spec, cfg.samples_per_dimension * spec.extended_dim(), rng);
  res.scores = objective(res.population);
  res.best = res.population.row(0).transpose();
  track_best(res.population, res.scores, res);
  return res;
}

SubsolverConfig SubsolverConfig::make(SubsolverKind kind, bool intensive) {
  SubsolverConfig cfg;
  cfg.kind = kind;
  if (intensive) {
    cfg.ga = GaConfig::intensive();
    cfg.sampling = SamplingConfig::intensive();
  }
  return cfg;
}

SubsolverResult minimize(const BatchObjective& objective, const ProblemSpec& spec, const SubsolverConfig& cfg,
                         Rng& rng) {
  return cfg.kind == SubsolverKind::Ga ? ga_minimize(objective, spec, cfg.ga, rng)
                                       : sample_minimize(objective, spec, cfg.sampling, rng);
}

}  // namespace rbfmix

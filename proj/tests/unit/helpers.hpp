#pragma once

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rbfmix/problem.hpp"

namespace testutil {

inline double sum_of_coords(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

inline rbfmix::ProblemSpec continuous_box(int n, double lo = 0.0, double hi = 1.0,
                                          rbfmix::Objective f = sum_of_coords) {
  return rbfmix::ProblemSpec(std::vector<rbfmix::Bounds>(static_cast<std::size_t>(n), {lo, hi}), {}, {},
                             std::move(f));
}

inline std::vector<std::string> labels(int m) {
  std::vector<std::string> out;
  for (int i = 1; i <= m; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

}  // namespace testutil

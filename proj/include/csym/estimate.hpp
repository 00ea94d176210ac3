#pragma once

// Monte Carlo estimate record shared by the isotropy and harness modules.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "csym/group.hpp"
#include "csym/models.hpp"

namespace csym {

/// One Monte Carlo mean with its standard error: the unit of every
/// empirical check. stderr = sample standard deviation / sqrt(trials).
struct MomentEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t trials = 0;
  SeedSpec seed;
  FiniteAbelianGroup target_group;
  std::string model_desc;

  double lo(double sigmas = 4.0) const { return mean - sigmas * stderr_; }
  double hi(double sigmas = 4.0) const { return mean + sigmas * stderr_; }
};

namespace detail {

// Two-accumulator mean/stderr in a fixed summation order.
struct RunningStat {
  double sum = 0.0, sumsq = 0.0;
  std::uint64_t n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double stderr_() const {
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    double var = (sumsq - sum * sum / nn) / (nn - 1.0);
    if (var < 0) var = 0;
    return std::sqrt(var / nn);
  }
};

}  // namespace detail

}  // namespace csym

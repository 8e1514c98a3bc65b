#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace testing_util {

struct Sample {
  double mean = 0.0;
  double se = 0.0;
  double variance = 0.0;
};

/// Mean, standard error and unbiased variance (Welford).
inline Sample summarize(const std::vector<double>& xs) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  Sample s;
  s.mean = mean;
  s.variance = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  s.se = n > 0 ? std::sqrt(s.variance / static_cast<double>(n)) : 0.0;
  return s;
}

/// |mean - expected| in units of the standard error.
inline double z_score(const Sample& s, double expected) {
  return s.se > 0.0 ? std::abs(s.mean - expected) / s.se : std::abs(s.mean - expected) * 1e300;
}

/// Independent lgamma-based oracle for Gamma ratios.
inline double gamma_ratio(double a, double b, double c, double d) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(c) - std::lgamma(d));
}

}  // namespace testing_util

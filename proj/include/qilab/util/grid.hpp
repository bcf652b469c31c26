#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "qilab/error.hpp"

namespace qilab {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) throw ValidationError("linspace: need at least one point");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("logspace: endpoints must be positive");
  auto v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  if (n > 1) {
    v.front() = a;
    v.back() = b;
  }
  return v;
}

} // namespace qilab

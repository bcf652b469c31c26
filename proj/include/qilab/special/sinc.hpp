#pragma once

#include <cmath>

namespace qilab {

/// Unnormalized sinc, sin(x)/x with sinc(0) = 1. Taylor series below
/// |x| < 1e-4 where sin(x)/x cancels.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

} // namespace qilab

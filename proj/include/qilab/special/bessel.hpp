#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "qilab/error.hpp"

namespace qilab {

/// Largest |order| accepted by the integer-order Bessel routines.
inline constexpr int kBesselOrderCap = 512;

namespace detail {

inline int miller_start(int nmax, double x) {
  const double top = std::max(static_cast<double>(nmax), x);
  int m = static_cast<int>(std::ceil(top)) + 40 + 10 * static_cast<int>(std::ceil(std::cbrt(top)));
  return m + (m & 1);
}

} // namespace detail

/// J_0(x), ..., J_nmax(x) for x >= 0 by Miller's downward recurrence,
/// normalized with J_0 + 2 sum_k J_2k = 1.
inline std::vector<double> bessel_j_sequence(int nmax, double x) {
  if (nmax < 0) throw ValidationError("bessel_j_sequence: negative order");
  if (nmax > kBesselOrderCap)
    throw NumericalGuardError("bessel_j_sequence: order " + std::to_string(nmax) + " exceeds cap " +
                              std::to_string(kBesselOrderCap));
  if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("bessel_j_sequence: argument must be finite and >= 0");

  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }

  constexpr double kBig = 1e250;
  constexpr double kSmall = 1e-250;
  const int m = detail::miller_start(nmax, x);
  const double two_over_x = 2.0 / x;

  double above = 0.0; // J_{k+1}
  double here = 1e-300; // J_k, arbitrary seed at k = m
  double norm = 0.0;
  for (int k = m; k >= 0; --k) {
    if (k <= nmax) out[static_cast<std::size_t>(k)] = here;
    if (k % 2 == 0) norm += (k == 0 ? 1.0 : 2.0) * here;
    if (k == 0) break;
    const double below = k * two_over_x * here - above;
    above = here;
    here = below;
    if (std::abs(here) > kBig) {
      here *= kSmall;
      above *= kSmall;
      norm *= kSmall;
      for (int i = k; i <= nmax; ++i) out[static_cast<std::size_t>(i)] *= kSmall;
    }
  }
  for (auto& v : out) v /= norm;
  return out;
}

/// Integer-order Bessel function of the first kind, any sign of n and x.
inline double bessel_j(int n, double x) {
  const int order = std::abs(n);
  double v = bessel_j_sequence(order, std::abs(x)).back();
  const bool odd = (order & 1) != 0;
  if (n < 0 && odd) v = -v;
  if (x < 0.0 && odd) v = -v;
  return v;
}

/// Root of J_n bracketed by [lo, hi] (sign change required), by bisection
/// to machine resolution.
inline double bessel_j_root(int n, double lo, double hi) {
  double flo = bessel_j(n, lo);
  const double fhi = bessel_j(n, hi);
  if (flo * fhi > 0.0) throw ValidationError("bessel_j_root: bracket does not straddle a root");
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = bessel_j(n, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace qilab

#pragma once

#include <cmath>
#include <cstdlib>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace qilab::oracle {

/// J_n(x) from the ascending power series in 120-digit arithmetic; the
/// extra digits absorb the cancellation for arguments up to ~100.
inline double bessel_j_series(int n, double x) {
  using big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<120>>;
  const int order = std::abs(n);
  const big half = big(x) / 2;
  const big q = -half * half;
  big term = 1;
  for (int i = 1; i <= order; ++i) term *= half / i;
  big sum = term;
  for (int k = 1; k < 2000; ++k) {
    term *= q / (big(k) * big(k + order));
    sum += term;
    if (k > half && abs(term) < abs(sum) * big("1e-40")) break;
    if (sum == 0 && term == 0) break;
  }
  double v = sum.convert_to<double>();
  if (n < 0 && (order & 1)) v = -v;
  return v;
}

} // namespace qilab::oracle

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "qilab/core/operator.hpp"
#include "qilab/core/state.hpp"

namespace qilab::oracle {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the value at (stream, counter) depends only on
/// the seed, so streams can be consumed in any order or in parallel.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(splitmix64(seed_ ^ splitmix64(stream_)) + counter);
  }
  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter) const { return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53; }

  std::uint64_t next_bits() { return bits(counter_++); }
  double next_uniform() { return uniform(counter_++); }
  double next_normal() {
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  complex next_complex_normal() {
    const double re = next_normal();
    return {re, next_normal()};
  }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

/// Random normalized state over labels 0..dim-1.
inline SystemState random_state(std::size_t dim, CounterRng& rng) {
  std::vector<int> labels;
  std::vector<complex> amps;
  for (std::size_t i = 0; i < dim; ++i) {
    labels.push_back(static_cast<int>(i));
    amps.push_back(rng.next_complex_normal());
  }
  return SystemState::normalized(std::move(labels), std::move(amps));
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
inline Eigen::MatrixXcd random_unitary(std::size_t dim, CounterRng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd z(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.next_complex_normal();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const complex d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

/// DenseOperator over systems with dims[j] labels 0..dims[j]-1.
inline DenseOperator random_unitary_operator(const std::vector<std::size_t>& dims, CounterRng& rng) {
  std::vector<LabelWindow> windows;
  std::size_t total = 1;
  for (auto d : dims) {
    windows.push_back({0, static_cast<int>(d) - 1});
    total *= d;
  }
  const auto u = random_unitary(total, rng);
  std::vector<complex> flat(total * total);
  for (std::size_t r = 0; r < total; ++r)
    for (std::size_t c = 0; c < total; ++c)
      flat[r * total + c] = u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return DenseOperator(std::move(windows), std::move(flat), 1e-12);
}

} // namespace qilab::oracle

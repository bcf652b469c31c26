#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "qilab/core/operator.hpp"
#include "qilab/error.hpp"
#include "qilab/pinem/ladder.hpp"

namespace qilab::oracle {

/// Dense <N|S|n> on a finite window, from exponentiating the truncated
/// generator. Entries near the window edge carry truncation artefacts;
/// only the interior two-thirds is trusted.
struct TruncatedOperatorMatrix {
  LabelWindow window;
  Eigen::MatrixXcd entries;

  complex at(int final_label, int initial_label) const {
    return entries(final_label - window.lo, initial_label - window.lo);
  }
  LabelWindow interior() const {
    const int drop = static_cast<int>(window.size()) / 6;
    return {window.lo + drop, window.hi - drop};
  }
};

/// Smallest admissible window width, 4 |2G| + 40.
inline std::size_t min_oracle_width(const pinem::InteractionCoupling& coupling) {
  return static_cast<std::size_t>(std::ceil(8.0 * std::abs(coupling.g))) + 40;
}

/// Symmetric window whose interior margin clears the Bessel reach of 2|G|
/// by 25 orders.
inline LabelWindow padded_oracle_window(const pinem::InteractionCoupling& coupling) {
  const int margin = static_cast<int>(std::ceil(2.0 * std::abs(coupling.g))) + 25;
  return LabelWindow::symmetric(3 * margin);
}

/// exp(A) by scaling and squaring with a Taylor core.
inline Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXcd b = a / std::ldexp(1.0, squarings);

  const auto n = a.rows();
  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * b) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// Generator G* R - G R^dagger with R|n> = |n+1>, truncated to the window.
inline TruncatedOperatorMatrix matrix_exponential_elements(const pinem::InteractionCoupling& coupling,
                                                           LabelWindow window) {
  coupling.validate();
  if (window.size() < min_oracle_width(coupling))
    throw NumericalGuardError("matrix_exponential_elements: window width " + std::to_string(window.size()) +
                              " below required " + std::to_string(min_oracle_width(coupling)));
  const auto n = static_cast<Eigen::Index>(window.size());
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    gen(i + 1, i) = std::conj(coupling.g);
    gen(i, i + 1) = -coupling.g;
  }
  return {window, expm(gen)};
}

} // namespace qilab::oracle

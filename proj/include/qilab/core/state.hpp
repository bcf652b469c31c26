#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "qilab/error.hpp"

namespace qilab {

using complex = std::complex<double>;

/// Pure state of one system expanded over integer eigenlabels.
///
/// Populations and coherences are always derived from the amplitudes,
/// p_a = |C_a|^2 and rho_ab = C_a conj(C_b).
class SystemState {
public:
  static constexpr double kNormTolerance = 1e-12;

  SystemState() = default;

  SystemState(std::vector<int> labels, std::vector<complex> amplitudes)
      : labels_(std::move(labels)), amplitudes_(std::move(amplitudes)) {
    validate();
  }

  /// Single eigenstate |label>.
  static SystemState eigenstate(int label) { return SystemState({label}, {complex(1.0, 0.0)}); }

  /// Rescales the amplitudes to unit norm before validating.
  static SystemState normalized(std::vector<int> labels, std::vector<complex> amplitudes) {
    double norm2 = 0.0;
    for (const auto& c : amplitudes) norm2 += std::norm(c);
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw ValidationError("SystemState: amplitudes have zero or non-finite norm");
    const double scale = 1.0 / std::sqrt(norm2);
    for (auto& c : amplitudes) c *= scale;
    return SystemState(std::move(labels), std::move(amplitudes));
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<complex>& amplitudes() const { return amplitudes_; }
  int label(std::size_t i) const { return labels_[i]; }
  complex amplitude(std::size_t i) const { return amplitudes_[i]; }

  double population(std::size_t i) const { return std::norm(amplitudes_[i]); }
  complex coherence(std::size_t i, std::size_t j) const {
    return amplitudes_[i] * std::conj(amplitudes_[j]);
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& c : amplitudes_) s += std::norm(c);
    return s;
  }

  /// Number of amplitudes that are exactly nonzero.
  std::size_t support_size() const {
    return static_cast<std::size_t>(std::count_if(amplitudes_.begin(), amplitudes_.end(),
                                                  [](const complex& c) { return c != complex(0.0, 0.0); }));
  }

  int min_label() const { return *std::min_element(labels_.begin(), labels_.end()); }
  int max_label() const { return *std::max_element(labels_.begin(), labels_.end()); }

private:
  void validate() const {
    if (labels_.empty()) throw ValidationError("SystemState: no eigenlabels");
    if (labels_.size() != amplitudes_.size())
      throw ValidationError("SystemState: labels and amplitudes differ in length");
    std::unordered_set<int> seen;
    for (int l : labels_)
      if (!seen.insert(l).second)
        throw ValidationError("SystemState: duplicate eigenlabel " + std::to_string(l));
    for (const auto& c : amplitudes_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw ValidationError("SystemState: non-finite amplitude");
    const double n2 = norm_squared();
    if (std::abs(n2 - 1.0) > kNormTolerance)
      throw ValidationError("SystemState: sum |C|^2 = " + short_number(n2) + " is not 1 within 1e-12");
  }

  std::vector<int> labels_;
  std::vector<complex> amplitudes_;
};

/// Unentangled product of N >= 1 system states.
class ProductState {
public:
  explicit ProductState(std::vector<SystemState> systems) : systems_(std::move(systems)) {
    if (systems_.empty()) throw ValidationError("ProductState: needs at least one system");
  }
  ProductState(std::initializer_list<SystemState> systems)
      : ProductState(std::vector<SystemState>(systems)) {}

  std::size_t size() const { return systems_.size(); }
  const SystemState& operator[](std::size_t j) const { return systems_[j]; }
  const std::vector<SystemState>& systems() const { return systems_; }

  /// Number of initial multi-indices, prod_j M_j.
  std::size_t multi_index_count() const {
    std::size_t n = 1;
    for (const auto& s : systems_) n *= s.size();
    return n;
  }

private:
  std::vector<SystemState> systems_;
};

} // namespace qilab

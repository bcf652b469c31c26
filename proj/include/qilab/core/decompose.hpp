#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qilab/core/operator.hpp"
#include "qilab/core/state.hpp"
#include "qilab/error.hpp"

namespace qilab {

/// Bitmask over system indices; bit j set means system j is in the subset.
using Subset = std::uint32_t;

inline std::string subset_to_string(Subset d) {
  std::string s = "{";
  bool first = true;
  for (unsigned j = 0; j < 32; ++j) {
    if (!(d & (Subset{1} << j))) continue;
    if (!first) s += ',';
    s += std::to_string(j);
    first = false;
  }
  return s + "}";
}

/// Partial assignment of final labels; unset entries are marginalized.
struct FinalSelector {
  std::vector<std::optional<int>> fixed;

  static FinalSelector all_free(std::size_t n) { return {std::vector<std::optional<int>>(n)}; }
  static FinalSelector all_fixed(std::vector<int> labels) {
    FinalSelector s;
    for (int l : labels) s.fixed.emplace_back(l);
    return s;
  }
  FinalSelector& fix(std::size_t system, int label) {
    fixed.at(system) = label;
    return *this;
  }
};

/// Probability contributions keyed by the set D of systems whose labels
/// differ between the two interfering pathways. D = {} is the no-QI term;
/// |D| = R is an R-process QI term.
class QIBreakdown {
public:
  QIBreakdown() = default;
  explicit QIBreakdown(std::size_t systems) : systems_(systems), terms_(std::size_t{1} << systems, 0.0) {}

  std::size_t system_count() const { return systems_; }
  std::size_t subset_count() const { return terms_.size(); }

  double& operator[](Subset d) { return terms_.at(d); }
  double operator[](Subset d) const { return terms_.at(d); }
  const std::vector<double>& terms() const { return terms_; }

  double without_qi() const { return terms_.at(0); }

  /// Sum of all R-process terms.
  double order(unsigned r) const {
    double s = 0.0;
    for (Subset d = 0; d < terms_.size(); ++d)
      if (static_cast<unsigned>(std::popcount(d)) == r) s += terms_[d];
    return s;
  }

  double total() const {
    double s = 0.0;
    for (double t : terms_) s += t;
    return s;
  }

  QIBreakdown& operator+=(const QIBreakdown& other) {
    for (std::size_t i = 0; i < terms_.size(); ++i) terms_[i] += other.terms_.at(i);
    return *this;
  }

private:
  std::size_t systems_ = 0;
  std::vector<double> terms_;
};

struct DecomposeOptions {
  /// Maximum number of initial multi-indices prod_j M_j.
  std::size_t max_multi_indices = 10000;
};

namespace detail {

inline void validate_inputs(const ProductState& state, const ScatteringOperator& op, const FinalSelector& sel,
                            const DecomposeOptions& opts) {
  const std::size_t n = state.size();
  if (n > 31) throw ValidationError("qi-core: at most 31 systems supported");
  if (op.system_count() != n)
    throw ValidationError("qi-core: operator acts on " + std::to_string(op.system_count()) + " systems, state has " +
                          std::to_string(n));
  if (sel.fixed.size() != n)
    throw ValidationError("qi-core: selector has " + std::to_string(sel.fixed.size()) + " entries, expected " +
                          std::to_string(n));
  std::size_t count = 1;
  for (std::size_t j = 0; j < n; ++j) {
    const auto w = op.window(j);
    if (sel.fixed[j] && !w.contains(*sel.fixed[j]))
      throw ValidationError("qi-core: fixed final label " + std::to_string(*sel.fixed[j]) + " of system " +
                            std::to_string(j) + " outside window [" + std::to_string(w.lo) + ", " +
                            std::to_string(w.hi) + "]");
    for (int l : state[j].labels())
      if (!w.contains(l))
        throw ValidationError("qi-core: initial label " + std::to_string(l) + " of system " + std::to_string(j) +
                              " outside window");
    if (std::abs(state[j].norm_squared() - 1.0) > SystemState::kNormTolerance)
      throw ValidationError("qi-core: system " + std::to_string(j) + " is not normalized");
    count *= state[j].size();
    if (count > opts.max_multi_indices) break;
  }
  if (count > opts.max_multi_indices)
    throw ValidationError("qi-core: initial multi-index count " + std::to_string(count) + " exceeds cap " +
                          std::to_string(opts.max_multi_indices));
}

/// Initial multi-indices as per-system positions, lexicographic with system 0 slowest.
inline std::vector<std::vector<std::size_t>> enumerate_positions(const ProductState& state) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> pos(state.size(), 0);
  while (true) {
    out.push_back(pos);
    std::size_t j = state.size();
    while (j > 0) {
      --j;
      if (++pos[j] < state[j].size()) break;
      pos[j] = 0;
      if (j == 0) return out;
    }
  }
}

/// Calls fn(final_labels) for every final configuration consistent with sel.
template <class Fn>
void for_each_final(const ScatteringOperator& op, const FinalSelector& sel, Fn&& fn) {
  const std::size_t n = sel.fixed.size();
  std::vector<int> labels(n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = sel.fixed[j] ? *sel.fixed[j] : op.window(j).lo;
  while (true) {
    fn(std::span<const int>(labels));
    std::size_t j = n;
    bool advanced = false;
    while (j > 0) {
      --j;
      if (sel.fixed[j]) continue;
      if (labels[j] < op.window(j).hi) {
        ++labels[j];
        advanced = true;
        break;
      }
      labels[j] = op.window(j).lo;
    }
    if (!advanced) return;
  }
}

} // namespace detail

/// P = sum over marginalized final labels of |<final| S |initial>|^2.
inline double direct_probability(const ProductState& state, const ScatteringOperator& op, const FinalSelector& sel,
                                 const DecomposeOptions& opts = {}) {
  detail::validate_inputs(state, op, sel, opts);
  const auto positions = detail::enumerate_positions(state);
  const std::size_t n = state.size();

  std::vector<std::vector<int>> initial(positions.size(), std::vector<int>(n));
  std::vector<complex> weight(positions.size());
  for (std::size_t a = 0; a < positions.size(); ++a) {
    complex w(1.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      initial[a][j] = state[j].label(positions[a][j]);
      w *= state[j].amplitude(positions[a][j]);
    }
    weight[a] = w;
  }

  double p = 0.0;
  detail::for_each_final(op, sel, [&](std::span<const int> fin) {
    complex amp(0.0, 0.0);
    for (std::size_t a = 0; a < positions.size(); ++a) amp += weight[a] * op.amplitude(initial[a], fin);
    p += std::norm(amp);
  });
  return p;
}

/// Groups |<final|S|initial>|^2 by the subset of systems whose initial
/// labels differ between the two interfering multi-indices.
///
/// Ordered pairs (a, a') and (a', a) are merged as 2 Re[...] so every stored
/// term is real. A system with a single nonzero amplitude contributes
/// exact zeros to every subset containing it.
inline QIBreakdown decompose(const ProductState& state, const ScatteringOperator& op, const FinalSelector& sel,
                             const DecomposeOptions& opts = {}) {
  detail::validate_inputs(state, op, sel, opts);
  const auto positions = detail::enumerate_positions(state);
  const std::size_t n = state.size();
  const std::size_t k = positions.size();

  std::vector<std::vector<int>> initial(k, std::vector<int>(n));
  std::vector<double> population(k);
  for (std::size_t a = 0; a < k; ++a) {
    double p = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      initial[a][j] = state[j].label(positions[a][j]);
      p *= state[j].population(positions[a][j]);
    }
    population[a] = p;
  }

  QIBreakdown out(n);
  std::vector<complex> s(k);
  detail::for_each_final(op, sel, [&](std::span<const int> fin) {
    for (std::size_t a = 0; a < k; ++a) s[a] = op.amplitude(initial[a], fin);
    for (std::size_t a = 0; a < k; ++a) {
      out[0] += population[a] * std::norm(s[a]);
      for (std::size_t b = a + 1; b < k; ++b) {
        Subset d = 0;
        complex w(1.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t pa = positions[a][j];
          const std::size_t pb = positions[b][j];
          if (pa != pb) {
            d |= Subset{1} << j;
            w *= state[j].coherence(pa, pb);
          } else {
            w *= state[j].population(pa);
          }
        }
        out[d] += 2.0 * (w * s[a] * std::conj(s[b])).real();
      }
    }
  });
  return out;
}

/// decompose() for each final label of one system, all other systems marginalized.
inline std::map<int, QIBreakdown> marginal_spectrum(const ProductState& state, const ScatteringOperator& op,
                                                    std::size_t system, LabelWindow labels,
                                                    const DecomposeOptions& opts = {}) {
  if (system >= state.size()) throw ValidationError("marginal_spectrum: system index out of range");
  const auto w = op.window(system);
  if (!w.contains(labels.lo) || !w.contains(labels.hi) || labels.lo > labels.hi)
    throw ValidationError("marginal_spectrum: label range outside operator window");
  std::map<int, QIBreakdown> out;
  for (int l = labels.lo; l <= labels.hi; ++l) {
    auto sel = FinalSelector::all_free(state.size());
    sel.fix(system, l);
    out.emplace(l, decompose(state, op, sel, opts));
  }
  return out;
}

} // namespace qilab

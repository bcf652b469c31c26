#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "qilab/core/decompose.hpp"
#include "qilab/core/operator.hpp"
#include "qilab/core/state.hpp"
#include "qilab/error.hpp"
#include "qilab/oracle/random.hpp"
#include "qilab/util/parallel.hpp"

namespace qilab::oracle {

namespace detail {

/// |<final|S|initial>|^2 summed over the free final labels, built by
/// recursion over systems without touching qi-core's enumeration.
inline double unfactored_probability(const ProductState& state, const ScatteringOperator& op,
                                     const FinalSelector& sel) {
  const std::size_t n = state.size();
  std::vector<int> in(n), out(n);
  double total = 0.0;

  auto amplitude_sum = [&](auto&& self, std::size_t j, complex weight) -> complex {
    if (j == n) return weight * op.amplitude(in, out);
    complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < state[j].size(); ++i) {
      in[j] = state[j].label(i);
      acc += self(self, j + 1, weight * state[j].amplitude(i));
    }
    return acc;
  };
  auto over_finals = [&](auto&& self, std::size_t j) -> void {
    if (j == n) {
      total += std::norm(amplitude_sum(amplitude_sum, 0, complex(1.0, 0.0)));
      return;
    }
    if (sel.fixed[j]) {
      out[j] = *sel.fixed[j];
      self(self, j + 1);
      return;
    }
    for (int l = op.window(j).lo; l <= op.window(j).hi; ++l) {
      out[j] = l;
      self(self, j + 1);
    }
  };
  over_finals(over_finals, 0);
  return total;
}

} // namespace detail

struct DirectSumReport {
  double decomposed = 0.0; // sum_D terms[D]
  double direct = 0.0;     // |<final|S|initial>|^2
  double delta = 0.0;      // |decomposed - direct|
};

/// Grouped decomposition against the unfactored probability.
inline DirectSumReport direct_sum_check(const ProductState& state, const ScatteringOperator& op,
                                        const FinalSelector& sel) {
  DirectSumReport r;
  r.decomposed = decompose(state, op, sel).total();
  r.direct = detail::unfactored_probability(state, op, sel);
  r.delta = std::abs(r.decomposed - r.direct);
  return r;
}

/// Worst direct_sum_check delta over every final label of one system.
inline double direct_sum_check(const ProductState& state, const ScatteringOperator& op, std::size_t system,
                               LabelWindow labels) {
  double worst = 0.0;
  for (int l = labels.lo; l <= labels.hi; ++l) {
    auto sel = FinalSelector::all_free(state.size());
    sel.fix(system, l);
    worst = std::max(worst, direct_sum_check(state, op, sel).delta);
  }
  return worst;
}

struct MonteCarloReport {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t system = 0;
  QIBreakdown mean;
  /// Standard error of the mean, per subset.
  std::vector<double> std_error;
  /// max_t |terms_t[{}] - terms_0[{}]|
  double empty_term_variation = 0.0;

  /// Largest |mean| / std_error over subsets containing the scrambled system.
  double worst_z() const {
    double z = 0.0;
    for (Subset d = 0; d < mean.subset_count(); ++d) {
      if (!(d & (Subset{1} << system))) continue;
      if (std_error[d] > 0.0) z = std::max(z, std::abs(mean[d]) / std_error[d]);
      else if (mean[d] != 0.0) z = std::numeric_limits<double>::infinity();
    }
    return z;
  }
};

/// Averages decompose() over trials in which every amplitude of `system`
/// picks up an independent uniform random phase.
inline MonteCarloReport phase_scramble(const ProductState& state, const ScatteringOperator& op,
                                       const FinalSelector& sel, std::size_t system, std::size_t trials,
                                       std::uint64_t seed, unsigned threads = thread_budget()) {
  if (trials < 100) throw ValidationError("phase_scramble: trials must be >= 100");
  if (system >= state.size()) throw ValidationError("phase_scramble: system index out of range");

  const CounterRng rng(seed, system);
  const auto& target = state[system];
  std::vector<QIBreakdown> per_trial(trials);
  parallel_for(
      trials,
      [&](std::size_t t) {
        std::vector<complex> amps = target.amplitudes();
        for (std::size_t i = 0; i < amps.size(); ++i)
          amps[i] *= std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform(t * amps.size() + i));
        std::vector<SystemState> systems = state.systems();
        systems[system] = SystemState(target.labels(), std::move(amps));
        per_trial[t] = decompose(ProductState(std::move(systems)), op, sel);
      },
      threads);

  MonteCarloReport r;
  r.trials = trials;
  r.seed = seed;
  r.system = system;
  r.mean = QIBreakdown(state.size());
  r.std_error.assign(r.mean.subset_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(trials);
  for (const auto& b : per_trial) r.mean += b;
  for (Subset d = 0; d < r.mean.subset_count(); ++d) r.mean[d] *= inv;
  for (Subset d = 0; d < r.mean.subset_count(); ++d) {
    double ss = 0.0;
    for (const auto& b : per_trial) ss += (b[d] - r.mean[d]) * (b[d] - r.mean[d]);
    r.std_error[d] = std::sqrt(ss / static_cast<double>(trials - 1)) / std::sqrt(static_cast<double>(trials));
  }
  for (const auto& b : per_trial) r.empty_term_variation = std::max(r.empty_term_variation, std::abs(b[0] - per_trial[0][0]));
  return r;
}

} // namespace qilab::oracle

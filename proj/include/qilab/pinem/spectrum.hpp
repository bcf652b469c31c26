#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qilab/core/operator.hpp"
#include "qilab/core/state.hpp"
#include "qilab/error.hpp"
#include "qilab/pinem/ladder.hpp"

namespace qilab::pinem {

/// Output gain/loss spectrum over a label window, with and without the
/// 1-process QI term.
struct GainLossSpectrum {
  LabelWindow window;
  std::vector<double> with_qi;
  std::vector<double> without_qi;

  std::size_t index(int n) const {
    if (!window.contains(n)) throw ValidationError("GainLossSpectrum: label " + std::to_string(n) + " outside window");
    return static_cast<std::size_t>(n - window.lo);
  }
  double with(int n) const { return with_qi[index(n)]; }
  double without(int n) const { return without_qi[index(n)]; }
  double qi_term(int n) const { return with(n) - without(n); }
};

inline constexpr double kCompletenessTolerance = 1e-8;

/// Half-width ceil(2(|G| + |G_mod|)) + 20; Bessel tails are negligible past it.
inline int recommended_half_width(double g_abs, double g_mod_abs) {
  return static_cast<int>(std::ceil(2.0 * (g_abs + g_mod_abs))) + 20;
}

/// P_N with and without QI for an arbitrary incoming state.
///
/// with_qi[N] = |sum_n C_n <N|S|n>|^2 and without_qi[N] = sum_n |C_n|^2 |<N|S|n>|^2.
/// Throws NumericalGuardError when either spectrum misses more than
/// `tolerance` of the probability inside the window.
inline GainLossSpectrum spectrum(const SystemState& input, const InteractionCoupling& coupling, LabelWindow window,
                                 double tolerance = kCompletenessTolerance) {
  coupling.validate();
  if (window.lo > window.hi) throw ValidationError("window: lo > hi");
  const int reach = std::max(window.hi - input.min_label(), input.max_label() - window.lo);
  const ShiftKernel s(coupling, std::max(reach, 0));

  GainLossSpectrum out{window, std::vector<double>(window.size()), std::vector<double>(window.size())};
  for (int big_n = window.lo; big_n <= window.hi; ++big_n) {
    complex amp(0.0, 0.0);
    double incoherent = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
      const complex e = s(big_n - input.label(i));
      amp += input.amplitude(i) * e;
      incoherent += input.population(i) * std::norm(e);
    }
    out.with_qi[static_cast<std::size_t>(big_n - window.lo)] = std::norm(amp);
    out.without_qi[static_cast<std::size_t>(big_n - window.lo)] = incoherent;
  }

  double sum_with = 0.0;
  double sum_without = 0.0;
  for (std::size_t i = 0; i < out.with_qi.size(); ++i) {
    sum_with += out.with_qi[i];
    sum_without += out.without_qi[i];
  }
  const double loss = std::max(std::abs(1.0 - sum_with), std::abs(1.0 - sum_without));
  if (loss > tolerance) {
    const int spread = std::max(std::abs(input.min_label()), std::abs(input.max_label()));
    const int suggested = recommended_half_width(std::abs(coupling.g), 0.0) + spread;
    throw NumericalGuardError("window: [" + std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                              "] misses " + short_number(loss) + " of the probability (guard " +
                              short_number(tolerance) + "); try half-width " + std::to_string(suggested));
  }
  return out;
}

inline GainLossSpectrum spectrum(const ModulationParams& params, const InteractionCoupling& coupling,
                                 std::optional<LabelWindow> window = std::nullopt,
                                 double tolerance = kCompletenessTolerance) {
  const auto comb = initial_amplitudes(params);
  const auto w = window.value_or(
      LabelWindow::symmetric(recommended_half_width(std::abs(coupling.g), std::abs(params.g_mod))));
  return spectrum(comb, coupling, w, tolerance);
}

struct SweepRow {
  double g_abs;
  double g_arg;
  int n;
  double with_qi;
  double without_qi;
};

/// One spectrum per coupling, rows emitted to `sink` in coupling order then N order.
template <class Sink>
void coupling_sweep(const ModulationParams& params, const std::vector<complex>& couplings,
                    std::optional<LabelWindow> window, Sink&& sink) {
  double g_max = 0.0;
  for (const auto& g : couplings) g_max = std::max(g_max, std::abs(g));
  const auto w = window.value_or(LabelWindow::symmetric(recommended_half_width(g_max, std::abs(params.g_mod))));
  const auto comb = initial_amplitudes(params);
  for (const auto& g : couplings) {
    const auto spec = spectrum(comb, InteractionCoupling(g), w);
    for (int n = w.lo; n <= w.hi; ++n)
      sink(SweepRow{std::abs(g), std::arg(g), n, spec.with(n), spec.without(n)});
  }
}

inline std::vector<SweepRow> coupling_sweep(const ModulationParams& params, const std::vector<complex>& couplings,
                                            std::optional<LabelWindow> window = std::nullopt) {
  std::vector<SweepRow> rows;
  coupling_sweep(params, couplings, window, [&](const SweepRow& r) { rows.push_back(r); });
  return rows;
}

} // namespace qilab::pinem

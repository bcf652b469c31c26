#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

#include "qilab/core/operator.hpp"
#include "qilab/core/state.hpp"
#include "qilab/error.hpp"
#include "qilab/special/bessel.hpp"

namespace qilab::pinem {

/// Shaping stage that prepares the incoming electron comb.
struct ModulationParams {
  complex g_mod{0.0, 0.0};
  double phi_mod = 0.0;
  /// Initial half-width of the comb; widened until the comb holds 1 - 1e-10 of the norm.
  int n_max = 0;

  void validate() const {
    if (!std::isfinite(g_mod.real()) || !std::isfinite(g_mod.imag()))
      throw ValidationError("g_mod: must be finite");
    if (!std::isfinite(phi_mod)) throw ValidationError("phi_mod: must be finite");
    if (n_max < 0) throw ValidationError("n_max: must be >= 0");
    if (std::abs(g_mod) > 50.0) throw ValidationError("g_mod: |G_mod| must be <= 50");
  }
};

/// Probe coupling G between the electron and the classical light field.
struct InteractionCoupling {
  complex g{0.0, 0.0};
  double max_abs = 50.0;

  InteractionCoupling() = default;
  InteractionCoupling(complex g_, double cap = 50.0) : g(g_), max_abs(cap) { validate(); }

  void validate() const {
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) throw ValidationError("g: must be finite");
    if (std::abs(g) > max_abs)
      throw ValidationError("g: |G| = " + short_number(std::abs(g)) + " exceeds guard " + short_number(max_abs));
  }
};

/// Cached J_k(2|G|) e^{-ik arg G} for |k| <= reach.
///
/// Sign convention: <N|S|n> = J_{N-n}(2|G|) e^{-i(N-n) arg G}, i.e. the
/// exponential of G* R - G R^dagger with R|n> = |n+1>.
class ShiftKernel {
public:
  ShiftKernel(const InteractionCoupling& coupling, int reach) : arg_(std::arg(coupling.g)) {
    coupling.validate();
    if (reach < 0) throw ValidationError("ShiftKernel: negative reach");
    if (reach > kBesselOrderCap)
      throw NumericalGuardError("s_matrix_element: |N - n| = " + std::to_string(reach) + " exceeds Bessel order cap " +
                                std::to_string(kBesselOrderCap));
    j_ = bessel_j_sequence(reach, 2.0 * std::abs(coupling.g));
  }

  int reach() const { return static_cast<int>(j_.size()) - 1; }

  complex operator()(int k) const {
    const int order = std::abs(k);
    if (order > reach())
      throw NumericalGuardError("s_matrix_element: |N - n| = " + std::to_string(order) + " beyond kernel reach " +
                                std::to_string(reach()));
    double mag = j_[static_cast<std::size_t>(order)];
    if (k < 0 && (order & 1)) mag = -mag;
    if (k == 0 || arg_ == 0.0) return {mag, 0.0};
    return std::polar(1.0, -static_cast<double>(k) * arg_) * mag;
  }

private:
  double arg_;
  std::vector<double> j_;
};

/// <N| S |n> for the ladder-shift S-matrix.
inline complex s_matrix_element(int final_label, int initial_label, const InteractionCoupling& coupling) {
  const int k = final_label - initial_label;
  return ShiftKernel(coupling, std::abs(k))(k);
}

/// Bessel comb C_n = e^{i phi_mod} J_n(2|G_mod|) e^{-i n arg G_mod}, normalized.
inline SystemState initial_amplitudes(const ModulationParams& params) {
  params.validate();
  const double x = 2.0 * std::abs(params.g_mod);
  int n_max = std::max(params.n_max, static_cast<int>(std::ceil(x)) + 10);
  std::vector<double> j;
  while (true) {
    if (n_max > kBesselOrderCap) throw NumericalGuardError("initial_amplitudes: comb exceeds Bessel order cap");
    j = bessel_j_sequence(n_max, x);
    double held = j[0] * j[0];
    for (int n = 1; n <= n_max; ++n) held += 2.0 * j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
    if (held >= 1.0 - 1e-10) break;
    n_max += 5;
  }

  const ShiftKernel comb({params.g_mod}, n_max);
  const complex global = std::polar(1.0, params.phi_mod);
  std::vector<int> labels;
  std::vector<complex> amps;
  for (int n = -n_max; n <= n_max; ++n) {
    labels.push_back(n);
    amps.push_back(global * comb(n));
  }
  return SystemState::normalized(std::move(labels), std::move(amps));
}

/// Single-system scattering operator for the probe stage.
class LadderShiftOperator final : public ScatteringOperator {
public:
  /// `support` is the range of initial labels the truncation loss is quoted for.
  LadderShiftOperator(const InteractionCoupling& coupling, LabelWindow window, LabelWindow support)
      : window_(window), kernel_(coupling, static_cast<int>(window.size()) - 1) {
    if (support.lo < window.lo || support.hi > window.hi)
      throw ValidationError("LadderShiftOperator: support outside window");
    for (int n = support.lo; n <= support.hi; ++n) {
      double kept = 0.0;
      for (int m = window.lo; m <= window.hi; ++m) kept += std::norm(kernel_(m - n));
      tolerance_ = std::max(tolerance_, 1.0 - kept);
    }
  }
  LadderShiftOperator(const InteractionCoupling& coupling, LabelWindow window)
      : LadderShiftOperator(coupling, window, window) {}

  std::size_t system_count() const override { return 1; }
  LabelWindow window(std::size_t) const override { return window_; }
  complex amplitude(std::span<const int> in, std::span<const int> out) const override {
    return kernel_(out[0] - in[0]);
  }
  double truncation_tolerance() const override { return tolerance_; }

private:
  LabelWindow window_;
  ShiftKernel kernel_;
  double tolerance_ = 0.0;
};

} // namespace qilab::pinem

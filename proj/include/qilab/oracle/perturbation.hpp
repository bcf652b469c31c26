#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>

#include "qilab/core/state.hpp"
#include "qilab/emission/model.hpp"
#include "qilab/error.hpp"

namespace qilab::oracle {

struct NumericRates {
  double gamma_a = 0.0;
  double gamma_e = 0.0;
  double gamma_ae = 0.0;
  std::size_t steps = 0;
};

namespace detail {

/// Composite Simpson of e^{i detuning t} over [-tau/2, tau/2] with `panels` (even).
inline complex simpson_phase_integral(double detuning, double tau, std::size_t panels) {
  const double h = tau / static_cast<double>(panels);
  const double t0 = -tau / 2;
  complex odd(0.0, 0.0), even(0.0, 0.0);
  for (std::size_t i = 1; i < panels; ++i) {
    const complex v = std::polar(1.0, detuning * (t0 + h * static_cast<double>(i)));
    (i % 2 ? odd : even) += v;
  }
  const complex ends = std::polar(1.0, detuning * t0) + std::polar(1.0, detuning * (t0 + tau));
  return (ends + 4.0 * odd + 2.0 * even) * (h / 3.0);
}

/// Simpson at n and 2n panels combined by one Richardson step.
inline complex phase_integral(double detuning, double tau, std::size_t panels) {
  const complex coarse = simpson_phase_integral(detuning, tau, panels);
  const complex fine = simpson_phase_integral(detuning, tau, 2 * panels);
  return fine + (fine - coarse) / 15.0;
}

struct Detunings {
  double atom, velocity, mod, tau, v0;
};

inline Detunings detunings(const emission::PhysicalConstants& k, const emission::FreeElectronParams& fe,
                           const emission::BoundElectronParams& be, const emission::CavityParams& cav) {
  fe.validate();
  be.validate();
  cav.validate();
  const auto kin = emission::velocity_from_kinetic(k, fe.kinetic_energy_ev);
  return {cav.omega_cav - be.omega_a, kin.beta0 * cav.omega_cav - fe.omega_mod, cav.omega_cav - fe.omega_mod,
          kin.tau(cav.length), kin.v0};
}

} // namespace detail

/// Panels needed for 20 panels per oscillation period of the fastest integrand.
inline std::size_t required_steps(const emission::PhysicalConstants& k, const emission::FreeElectronParams& fe,
                                  const emission::BoundElectronParams& be, const emission::CavityParams& cav) {
  const auto d = detail::detunings(k, fe, be, cav);
  const double fastest = std::max({std::abs(d.atom), std::abs(d.velocity), std::abs(d.mod)});
  const double periods = fastest * d.tau / (2 * std::numbers::pi);
  auto n = static_cast<std::size_t>(std::ceil(20.0 * periods));
  return std::max<std::size_t>(1000, n + (n & 1));
}

/// First-order emission amplitudes integrated numerically in time.
///
/// A_a  = -i kappa_a e^{-i q z_a} int e^{i (w_cav - w_a) t} dt
/// A_e  = kappa_e e^{-i Psi_b} (1/tau) int e^{i (beta0 w_cav - w_mod) t} dt int e^{i (w_cav - w_mod) t} dt
/// with kappa_a = (w_a |d| / w_cav) sqrt(w_cav / (2 hbar eps0 V)),
/// kappa_e = e v0 sqrt(1 / (2 hbar w_cav eps0 V)), t in [-tau/2, tau/2], and
/// Gamma_a = rho_ee |A_a|^2 / tau, Gamma_e = |A_e|^2 / tau,
/// Gamma_ae = 2 Re[rho_eg |b| A_a conj(A_e)] / tau.
inline NumericRates perturbation_integrator(const emission::PhysicalConstants& k,
                                            const emission::FreeElectronParams& fe,
                                            const emission::BoundElectronParams& be,
                                            const emission::CavityParams& cav, std::size_t steps) {
  if (steps < 1000) throw ValidationError("steps: need at least 1000 Simpson panels");
  steps += steps & 1;
  const std::size_t needed = required_steps(k, fe, be, cav);
  if (steps < needed)
    throw NumericalGuardError("perturbation_integrator: unresolved oscillation, need at least " +
                              std::to_string(needed) + " panels, got " + std::to_string(steps));

  const auto d = detail::detunings(k, fe, be, cav);
  const double kappa_a =
      (be.omega_a * be.dipole / cav.omega_cav) * std::sqrt(cav.omega_cav / (2 * k.hbar * k.eps0 * cav.mode_volume));
  const double kappa_e = k.e_charge * d.v0 * std::sqrt(1.0 / (2 * k.hbar * cav.omega_cav * k.eps0 * cav.mode_volume));

  const complex i_atom = detail::phase_integral(d.atom, d.tau, steps);
  const complex i_velocity = detail::phase_integral(d.velocity, d.tau, steps);
  const complex i_mod = detail::phase_integral(d.mod, d.tau, steps);

  const complex minus_i(0.0, -1.0);
  const complex a_atom = minus_i * kappa_a * std::polar(1.0, -cav.omega_cav * be.z_a / k.c) * i_atom;
  const complex a_electron = kappa_e * std::polar(1.0, -fe.bunching_phase) * i_velocity * i_mod / d.tau;
  const complex rho_eg = std::polar(std::sin(be.theta_a) / 2, be.phi_a);
  const double rho_ee = std::cos(be.theta_a / 2) * std::cos(be.theta_a / 2);

  NumericRates r;
  r.steps = steps;
  r.gamma_a = rho_ee * std::norm(a_atom) / d.tau;
  r.gamma_e = std::norm(a_electron) / d.tau;
  r.gamma_ae = 2.0 * (rho_eg * fe.bunching_abs * a_atom * std::conj(a_electron)).real() / d.tau;
  return r;
}

} // namespace qilab::oracle

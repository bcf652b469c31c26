#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include "qilab/error.hpp"
#include "qilab/special/sinc.hpp"

namespace qilab::emission {

/// CODATA 2018 exact/recommended values, SI units.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;   // J s
  double eps0 = 8.8541878128e-12;  // C^2 N^-1 m^-2
  double e_charge = 1.602176634e-19; // C
  double c = 299792458.0;          // m/s
  double m_e = 9.1093837015e-31;   // kg

  double electron_rest_energy_ev() const { return m_e * c * c / e_charge; }
};

inline constexpr PhysicalConstants kCodata2018{};

/// Modulated free electron passing the cavity.
struct FreeElectronParams {
  double kinetic_energy_ev = 30e3;
  double omega_mod = 3e15;     // rad/s
  double bunching_abs = 0.99;  // |b|
  double bunching_phase = 0.0; // Psi_b, rad

  void validate() const {
    if (!(kinetic_energy_ev > 0.0) || !std::isfinite(kinetic_energy_ev))
      throw ValidationError("kinetic_energy_ev: must be > 0");
    if (!std::isfinite(omega_mod) || omega_mod < 0.0) throw ValidationError("omega_mod: must be finite and >= 0");
    if (!(bunching_abs >= 0.0 && bunching_abs <= 1.0)) throw ValidationError("bunching_abs: |b| must lie in [0, 1]");
    if (!std::isfinite(bunching_phase)) throw ValidationError("bunching_phase: must be finite");
  }
};

/// Two-level emitter in a pure state on the Bloch sphere.
struct BoundElectronParams {
  double omega_a = 3e15;    // rad/s
  double dipole = 4.33e-29; // C m, along the mode axis
  double z_a = 0.0;         // m
  double theta_a = std::numbers::pi / 2;
  double phi_a = std::numbers::pi / 2;

  // the poles are exact so that pure states give exactly zero coherence
  double rho_ee() const {
    if (theta_a == std::numbers::pi) return 0.0;
    const double c = std::cos(theta_a / 2);
    return c * c;
  }
  double rho_eg_abs() const {
    if (theta_a == 0.0 || theta_a == std::numbers::pi) return 0.0;
    return std::sin(theta_a) / 2;
  }
  std::complex<double> rho_eg() const { return std::polar(rho_eg_abs(), phi_a); }

  void validate() const {
    if (!(omega_a > 0.0) || !std::isfinite(omega_a)) throw ValidationError("omega_a: must be > 0");
    if (!(dipole >= 0.0) || !std::isfinite(dipole)) throw ValidationError("dipole: must be finite and >= 0");
    if (!std::isfinite(z_a)) throw ValidationError("z_a: must be finite");
    if (!(theta_a >= 0.0 && theta_a <= std::numbers::pi)) throw ValidationError("theta_a: must lie in [0, pi]");
    if (!std::isfinite(phi_a)) throw ValidationError("phi_a: must be finite");
  }
};

/// Single longitudinal cavity mode, q = omega_cav / c along z.
struct CavityParams {
  double omega_cav = 3e15; // rad/s
  double mode_volume = 0.0; // m^3
  double length = 1e-7;     // m

  /// V = L (lambda/2)^2 with lambda = 2 pi c / omega_cav.
  static double default_volume(double omega_cav, double length, const PhysicalConstants& k = kCodata2018) {
    const double half_lambda = std::numbers::pi * k.c / omega_cav;
    return length * half_lambda * half_lambda;
  }
  static CavityParams with_default_volume(double omega_cav, double length,
                                          const PhysicalConstants& k = kCodata2018) {
    return {omega_cav, default_volume(omega_cav, length, k), length};
  }

  void validate() const {
    if (!(omega_cav > 0.0) || !std::isfinite(omega_cav)) throw ValidationError("omega_cav: must be > 0");
    if (!(mode_volume > 0.0) || !std::isfinite(mode_volume)) throw ValidationError("mode_volume: must be > 0");
    if (!(length > 0.0) || !std::isfinite(length)) throw ValidationError("length: must be > 0");
  }
};

struct Kinematics {
  double v0;    // m/s
  double beta0; // v0 / c
  double tau(double length) const { return length / v0; }
};

/// Relativistic speed from kinetic energy in eV.
inline Kinematics velocity_from_kinetic(const PhysicalConstants& k, double kinetic_energy_ev) {
  if (!(kinetic_energy_ev > 0.0)) throw ValidationError("kinetic_energy_ev: must be > 0");
  const double t = kinetic_energy_ev / k.electron_rest_energy_ev();
  // beta = sqrt(gamma^2 - 1) / gamma with gamma^2 - 1 = t (t + 2)
  const double beta = std::sqrt(t * (t + 2.0)) / (1.0 + t);
  return {beta * k.c, beta};
}

/// Gamma_a, Gamma_e, Gamma_ae with the combined rate and figure of merit.
struct EmissionRates {
  double gamma_a = 0.0;
  double gamma_e = 0.0;
  double gamma_ae = 0.0;
  double total = 0.0;
  /// Gamma_ae / (Gamma_a + Gamma_e); empty when the denominator is below 1e-300 1/s.
  std::optional<double> fom;
};

/// Phase-matching factors and interaction time shared by every rate.
struct RateGeometry {
  double tau;
  double v0;
  double beta0;
  double sinc_atom;     // sinc[(w_cav - w_a) tau / 2]
  double sinc_velocity; // sinc[(beta0 w_cav - w_mod) tau / 2]
  double sinc_mod;      // sinc[(w_cav - w_mod) tau / 2]
  /// xi = phi_a - w_cav z_a / c - pi/2 + Psi_b
  double xi;
};

inline RateGeometry rate_geometry(const PhysicalConstants& k, const FreeElectronParams& fe,
                                  const BoundElectronParams& be, const CavityParams& cav) {
  fe.validate();
  be.validate();
  cav.validate();
  const auto kin = velocity_from_kinetic(k, fe.kinetic_energy_ev);
  const double tau = kin.tau(cav.length);
  const double w = cav.omega_cav;
  return {tau,
          kin.v0,
          kin.beta0,
          sinc((w - be.omega_a) * tau / 2),
          sinc((kin.beta0 * w - fe.omega_mod) * tau / 2),
          sinc((w - fe.omega_mod) * tau / 2),
          be.phi_a - w * be.z_a / k.c - std::numbers::pi / 2 + fe.bunching_phase};
}

/// QI rate between free-electron and bound-electron emission.
inline double rate_qi(const PhysicalConstants& k, const FreeElectronParams& fe, const BoundElectronParams& be,
                      const CavityParams& cav) {
  const auto g = rate_geometry(k, fe, be, cav);
  const double prefactor =
      (g.tau / k.hbar) * (k.e_charge * g.v0 * be.omega_a * be.dipole / (k.eps0 * cav.mode_volume * cav.omega_cav));
  return prefactor * be.rho_eg_abs() * fe.bunching_abs * std::cos(g.xi) * g.sinc_atom * g.sinc_velocity *
         g.sinc_mod;
}

struct CompanionRates {
  double gamma_a;
  double gamma_e;
};

/// Bound-electron and free-electron emission rates of the first-order model
/// whose interference cross term is rate_qi.
inline CompanionRates companion_rates(const PhysicalConstants& k, const FreeElectronParams& fe,
                                      const BoundElectronParams& be, const CavityParams& cav) {
  const auto g = rate_geometry(k, fe, be, cav);
  const double common = g.tau / (k.hbar * 2.0 * k.eps0 * cav.mode_volume * cav.omega_cav);
  const double atom = be.omega_a * be.dipole * g.sinc_atom;
  const double electron = k.e_charge * g.v0 * g.sinc_velocity * g.sinc_mod;
  return {be.rho_ee() * common * atom * atom, common * electron * electron};
}

inline EmissionRates rates(const PhysicalConstants& k, const FreeElectronParams& fe, const BoundElectronParams& be,
                           const CavityParams& cav) {
  const auto comp = companion_rates(k, fe, be, cav);
  EmissionRates r;
  r.gamma_a = comp.gamma_a;
  r.gamma_e = comp.gamma_e;
  r.gamma_ae = rate_qi(k, fe, be, cav);
  r.total = r.gamma_a + r.gamma_e + r.gamma_ae;
  const double denom = r.gamma_a + r.gamma_e;
  if (denom >= 1e-300) r.fom = r.gamma_ae / denom;
  return r;
}

} // namespace qilab::emission

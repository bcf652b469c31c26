#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qilab/core/decompose.hpp"
#include "qilab/emission/model.hpp"
#include "qilab/oracle/bessel_reference.hpp"
#include "qilab/oracle/checks.hpp"
#include "qilab/oracle/matrix_exponential.hpp"
#include "qilab/oracle/perturbation.hpp"
#include "qilab/oracle/random.hpp"
#include "qilab/pinem/ladder.hpp"
#include "qilab/pinem/spectrum.hpp"
#include "qilab/special/bessel.hpp"

namespace qilab::oracle {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double max_delta = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Bessel recurrence against the multiprecision series, orders 0..60 and
/// x in (0, 100]. Error bound 1e-12 |J| + 2e-15.
inline SuiteResult verify_bessel() {
  SuiteResult r{"bessel-accuracy", true, 0.0, 1e-12, ""};
  for (double x : {0.01, 0.3, 1.0, 2.4, 5.0, 11.7, 20.0, 33.3, 50.0, 71.1, 100.0}) {
    const auto seq = bessel_j_sequence(60, x);
    for (int n = 0; n <= 60; ++n) {
      const double ref = bessel_j_series(n, x);
      const double err = std::abs(seq[static_cast<std::size_t>(n)] - ref);
      const double scaled = err / (std::abs(ref) + 2e-3);
      r.max_delta = std::max(r.max_delta, scaled);
      if (err > 1e-12 * std::abs(ref) + 2e-15) r.passed = false;
    }
  }
  const double zero = bessel_j_root(0, 2.0, 3.0);
  r.detail = "j01=" + std::to_string(zero);
  if (std::abs(zero - 2.404826) > 1e-6) r.passed = false;
  return r;
}

/// Analytic ladder elements against the exponentiated truncated generator.
inline SuiteResult verify_s_matrix(const std::vector<double>& magnitudes = {0.1, 0.7, 1.5, 5.0},
                                   double phase = 0.3) {
  SuiteResult r{"s-matrix-expm", true, 0.0, 1e-8, ""};
  for (double mag : magnitudes) {
    for (double arg : {0.0, phase}) {
      const pinem::InteractionCoupling g(std::polar(mag, arg));
      const auto m = matrix_exponential_elements(g, padded_oracle_window(g));
      const auto in = m.interior();
      for (int big_n = in.lo; big_n <= in.hi; ++big_n)
        for (int n = in.lo; n <= in.hi; ++n)
          r.max_delta = std::max(r.max_delta, std::abs(m.at(big_n, n) - pinem::s_matrix_element(big_n, n, g)));
    }
  }
  r.passed = r.max_delta < r.tolerance;
  return r;
}

/// Random product states and unitaries, N in {1,2,3}, per-system dimension <= 4.
inline SuiteResult verify_direct_sum(std::uint64_t seed, std::size_t configs = 200) {
  SuiteResult r{"direct-sum", true, 0.0, 1e-12, ""};
  CounterRng rng(seed, 1);
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = 1 + rng.next_bits() % 3;
    std::vector<std::size_t> dims;
    std::vector<SystemState> systems;
    for (std::size_t j = 0; j < n; ++j) {
      dims.push_back(1 + rng.next_bits() % 4);
      systems.push_back(random_state(dims.back(), rng));
    }
    const auto op = random_unitary_operator(dims, rng);
    auto sel = FinalSelector::all_free(n);
    for (std::size_t j = 0; j < n; ++j)
      if (rng.next_uniform() < 0.6) sel.fix(j, static_cast<int>(rng.next_bits() % dims[j]));
    const auto rep = direct_sum_check(ProductState(std::move(systems)), op, sel);
    r.max_delta = std::max(r.max_delta, rep.delta / std::max(1.0, rep.direct));
  }
  r.passed = r.max_delta < r.tolerance;
  r.detail = "configs=" + std::to_string(configs);
  return r;
}

/// PINEM spectrum against qi-core on the same ladder operator.
inline SuiteResult verify_pinem_qi_core() {
  SuiteResult r{"pinem-qi-core", true, 0.0, 1e-12, ""};
  const pinem::ModulationParams mod{std::polar(0.5, 0.4), 0.2, 0};
  const pinem::InteractionCoupling g(std::polar(0.7, 0.4));
  const auto comb = pinem::initial_amplitudes(mod);
  const auto window = LabelWindow::symmetric(40);
  const auto spec = pinem::spectrum(comb, g, window);
  const pinem::LadderShiftOperator op(g, window, {comb.min_label(), comb.max_label()});
  const ProductState state{comb};
  for (int big_n = -15; big_n <= 15; ++big_n) {
    const auto terms = decompose(state, op, FinalSelector::all_fixed({big_n}));
    r.max_delta = std::max(r.max_delta, std::abs(terms.total() - spec.with(big_n)));
    r.max_delta = std::max(r.max_delta, std::abs(terms.without_qi() - spec.without(big_n)));
  }
  r.passed = r.max_delta < r.tolerance;
  return r;
}

/// Aligned two-stage spectra against J_N(2(|G| + |G_mod|))^2 from the series.
inline SuiteResult verify_graf(std::uint64_t seed, std::size_t pairs = 20) {
  SuiteResult r{"graf-composition", true, 0.0, 1e-10, ""};
  CounterRng rng(seed, 2);
  for (std::size_t p = 0; p < pairs; ++p) {
    const double g = 2.0 * rng.next_uniform();
    const double gm = 2.0 * rng.next_uniform();
    const double arg = 2.0 * std::numbers::pi * rng.next_uniform();
    const auto spec = pinem::spectrum(pinem::ModulationParams{std::polar(gm, arg), 0.0, 0},
                                      pinem::InteractionCoupling(std::polar(g, arg)));
    for (int big_n = spec.window.lo; big_n <= spec.window.hi; ++big_n) {
      const double j = bessel_j_series(big_n, 2.0 * (g + gm));
      r.max_delta = std::max(r.max_delta, std::abs(spec.with(big_n) - j * j));
    }
  }
  r.passed = r.max_delta < r.tolerance;
  return r;
}

/// Random-phase averaging of the shaped PINEM comb.
inline SuiteResult verify_phase_scramble(std::uint64_t seed, std::size_t trials = 10000) {
  SuiteResult r{"phase-scramble", true, 0.0, 5.0, ""};
  const auto comb = pinem::initial_amplitudes({0.5, 0.0, 0});
  const pinem::InteractionCoupling g(0.7);
  const pinem::LadderShiftOperator op(g, LabelWindow::symmetric(30), {comb.min_label(), comb.max_label()});
  const auto rep = phase_scramble(ProductState{comb}, op, FinalSelector::all_fixed({0}), 0, trials, seed);
  r.max_delta = rep.worst_z();
  r.passed = r.max_delta < 5.0 && rep.empty_term_variation <= 1e-15;
  r.detail = "trials=" + std::to_string(trials) + " empty_term_variation=" + short_number(rep.empty_term_variation);
  return r;
}

/// Seeded sample of emission configurations for the time-integration oracle.
struct EmissionSample {
  emission::FreeElectronParams fe;
  emission::BoundElectronParams be;
  emission::CavityParams cav;
};

inline std::vector<EmissionSample> emission_samples(std::uint64_t seed, std::size_t count) {
  CounterRng rng(seed, 3);
  auto log_uniform = [&](double a, double b) { return a * std::pow(b / a, rng.next_uniform()); };
  std::vector<EmissionSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    EmissionSample s;
    s.fe.kinetic_energy_ev = log_uniform(1e2, 1e6);
    s.be.omega_a = log_uniform(1e13, 3e15);
    s.be.dipole = log_uniform(1e-30, 1e-27);
    s.be.theta_a = std::numbers::pi * (0.05 + 0.9 * rng.next_uniform());
    s.be.phi_a = 2 * std::numbers::pi * rng.next_uniform();
    s.be.z_a = 1e-6 * rng.next_uniform();
    const double omega_cav = s.be.omega_a * (0.8 + 0.4 * rng.next_uniform());
    s.fe.omega_mod = omega_cav * (0.3 + 0.9 * rng.next_uniform());
    s.fe.bunching_abs = rng.next_uniform();
    s.fe.bunching_phase = 2 * std::numbers::pi * rng.next_uniform();
    // keep each phase-matching argument within a few periods
    const auto kin = emission::velocity_from_kinetic(emission::kCodata2018, s.fe.kinetic_energy_ev);
    const double length = kin.v0 * log_uniform(0.05, 20.0) / omega_cav;
    s.cav = emission::CavityParams::with_default_volume(omega_cav, length);
    out.push_back(s);
  }
  return out;
}

/// Closed-form rates against Simpson time integration.
inline SuiteResult verify_perturbation(std::uint64_t seed, std::size_t points = 50) {
  SuiteResult r{"perturbation", true, 0.0, 1e-9, ""};
  const auto& k = emission::kCodata2018;
  for (const auto& s : emission_samples(seed, points)) {
    const auto closed = emission::rates(k, s.fe, s.be, s.cav);
    const auto steps = std::max<std::size_t>(4000, 10 * required_steps(k, s.fe, s.be, s.cav));
    const auto num = perturbation_integrator(k, s.fe, s.be, s.cav, steps);
    const auto g = emission::rate_geometry(k, s.fe, s.be, s.cav);
    // Gamma_ae is compared on the scale of its cos(xi) = 1 magnitude
    const double ae_scale = std::abs(closed.gamma_ae / std::cos(g.xi));
    r.max_delta = std::max({r.max_delta, std::abs(num.gamma_a - closed.gamma_a) / closed.gamma_a,
                            std::abs(num.gamma_e - closed.gamma_e) / closed.gamma_e,
                            ae_scale > 0 ? std::abs(num.gamma_ae - closed.gamma_ae) / ae_scale : 0.0});
  }
  r.passed = r.max_delta < r.tolerance;
  r.detail = "points=" + std::to_string(points);
  return r;
}

inline std::vector<SuiteResult> verify_all(std::uint64_t seed) {
  return {verify_bessel(),       verify_s_matrix(),         verify_direct_sum(seed), verify_pinem_qi_core(),
          verify_graf(seed),     verify_phase_scramble(seed), verify_perturbation(seed)};
}

} // namespace qilab::oracle

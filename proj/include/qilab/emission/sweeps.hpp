#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "qilab/emission/model.hpp"
#include "qilab/emission/optimize.hpp"
#include "qilab/error.hpp"
#include "qilab/util/parallel.hpp"

namespace qilab::emission {

struct BlochCell {
  double theta_a;
  double phi_a;
  EmissionRates rates;
  double fom_abs() const { return std::abs(rates.fom.value_or(0.0)); }
};

/// Rates over the emitter's Bloch sphere at fixed length; rows are
/// theta-major. `be` supplies omega_a, dipole and z_a.
inline std::vector<BlochCell> bloch_map(const PhysicalConstants& k, const FreeElectronParams& fe,
                                        const BoundElectronParams& be, const CavityParams& cav,
                                        const std::vector<double>& theta_grid, const std::vector<double>& phi_grid) {
  for (double t : theta_grid)
    if (!(t >= 0.0 && t <= std::numbers::pi)) throw ValidationError("theta_grid: values must lie in [0, pi]");
  for (double p : phi_grid)
    if (!(p >= 0.0 && p < 2 * std::numbers::pi)) throw ValidationError("phi_grid: values must lie in [0, 2 pi)");
  std::vector<BlochCell> out;
  out.reserve(theta_grid.size() * phi_grid.size());
  for (double t : theta_grid)
    for (double p : phi_grid) {
      BoundElectronParams b = be;
      b.theta_a = t;
      b.phi_a = p;
      out.push_back({t, p, rates(k, fe, b, cav)});
    }
  return out;
}

struct ResonanceCell {
  double length;
  double omega_cav;
  EmissionRates rates;
};

/// Rates over (L, omega_cav), L-major. Under track_cavity the modulation
/// frequency follows each omega_cav.
inline std::vector<ResonanceCell> resonance_sweep(const PhysicalConstants& k, const FreeElectronParams& fe,
                                                  const BoundElectronParams& be, const CavityTemplate& cav,
                                                  const std::vector<double>& l_grid,
                                                  const std::vector<double>& omega_cav_grid,
                                                  OmegaModPolicy policy = OmegaModPolicy::track_cavity,
                                                  unsigned threads = thread_budget()) {
  if (policy == OmegaModPolicy::joint) throw ValidationError("resonance_sweep: joint omega_mod policy not supported");
  std::vector<ResonanceCell> out(l_grid.size() * omega_cav_grid.size());
  parallel_for(
      out.size(),
      [&](std::size_t idx) {
        const double l = l_grid[idx / omega_cav_grid.size()];
        const double w = omega_cav_grid[idx % omega_cav_grid.size()];
        CavityTemplate c = cav;
        c.omega_cav = w;
        FreeElectronParams f = fe;
        if (policy == OmegaModPolicy::track_cavity) f.omega_mod = w;
        out[idx] = {l, w, rates(k, f, be, c.at(l, k))};
      },
      threads);
  return out;
}

} // namespace qilab::emission

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qilab/emission/model.hpp"
#include "qilab/error.hpp"
#include "qilab/util/grid.hpp"
#include "qilab/util/parallel.hpp"

namespace qilab::emission {

/// Cavity with the length left free. Without an explicit volume the mode
/// volume follows V = L (lambda/2)^2.
struct CavityTemplate {
  double omega_cav = 3e15;
  std::optional<double> mode_volume;

  CavityParams at(double length, const PhysicalConstants& k = kCodata2018) const {
    return {omega_cav, mode_volume.value_or(CavityParams::default_volume(omega_cav, length, k)), length};
  }
};

enum class OmegaModPolicy {
  track_cavity, ///< omega_mod = omega_cav
  fixed,        ///< omega_mod taken from FreeElectronParams
  joint,        ///< optimize over (L, omega_mod)
};

struct LengthScan {
  double l_min = 1e-10; // m
  double l_max = 1e-1;  // m
  std::size_t points = 2000;
  /// Relative length tolerance of the golden-section refinement.
  double rel_tol = 1e-9;
  /// Peaks within this relative distance of the best |fom| count as ties;
  /// the shortest tied length is reported.
  double tie_tol = 1e-6;

  void validate() const {
    if (!(l_min > 0.0) || !(l_max > l_min)) throw ValidationError("l_range: need 0 < L_min < L_max");
    if (points < 3) throw ValidationError("points: need at least 3 scan points");
    if (!(rel_tol > 0.0)) throw ValidationError("rel_tol: must be > 0");
  }
};

struct LengthOptimum {
  double l_opt = 0.0;
  double gamma_max = 0.0; // signed fom at l_opt
  double omega_mod = 0.0;
  /// Objective variation over the scan was below 1e-15.
  bool degenerate = false;
};

namespace detail {

/// Maximizes f on [a, b] by golden section in log coordinates. Returns (x, f(x)).
inline std::pair<double, double> golden_max_log(const std::function<double(double)>& f, double a, double b,
                                                double rel_tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = std::log(a);
  double hi = std::log(b);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(std::exp(x1));
  double f2 = f(std::exp(x2));
  while (hi - lo > rel_tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(std::exp(x2));
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(std::exp(x1));
    }
  }
  double best_x = f1 >= f2 ? x1 : x2;
  double best_f = std::max(f1, f2);
  return {std::exp(best_x), best_f};
}

/// Scan-then-refine maximum of |objective(x)| over log-spaced x; shortest
/// tied peak wins.
struct Peak {
  double x;
  double value; // |objective|
};

inline std::optional<Peak> scan_refine(const std::function<double(double)>& magnitude, const std::vector<double>& grid,
                                       double rel_tol, double tie_tol) {
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = magnitude(grid[i]);
  const auto [mn, mx] = std::minmax_element(f.begin(), f.end());
  if (*mx - *mn < 1e-15) return std::nullopt;

  std::vector<Peak> peaks;
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || f[i] >= f[i - 1];
    const bool right_ok = i + 1 == n || f[i] >= f[i + 1];
    if (!(left_ok && right_ok)) continue;
    Peak best{grid[i], f[i]};
    // the true peak can sit on either side of the grid point
    if (i > 0) {
      const auto [x, v] = golden_max_log(magnitude, grid[i - 1], grid[i], rel_tol);
      if (v > best.value) best = {x, v};
    }
    if (i + 1 < n) {
      const auto [x, v] = golden_max_log(magnitude, grid[i], grid[i + 1], rel_tol);
      if (v > best.value) best = {x, v};
    }
    peaks.push_back(best);
  }
  double top = 0.0;
  for (const auto& p : peaks) top = std::max(top, p.value);
  for (const auto& p : peaks)
    if (p.value >= top * (1.0 - tie_tol)) return p; // peaks are in increasing x
  return peaks.front();
}

} // namespace detail

/// Interaction length maximizing |fom|.
inline LengthOptimum optimize_length(const PhysicalConstants& k, const FreeElectronParams& fe,
                                     const BoundElectronParams& be, const CavityTemplate& cav, const LengthScan& scan = {},
                                     OmegaModPolicy policy = OmegaModPolicy::track_cavity) {
  scan.validate();
  fe.validate();
  be.validate();
  const auto grid = logspace(scan.l_min, scan.l_max, scan.points);

  auto fom_at = [&](double length, double omega_mod) {
    FreeElectronParams f = fe;
    f.omega_mod = omega_mod;
    return rates(k, f, be, cav.at(length, k)).fom.value_or(0.0);
  };

  if (policy != OmegaModPolicy::joint) {
    const double w_mod = policy == OmegaModPolicy::track_cavity ? cav.omega_cav : fe.omega_mod;
    const auto peak = detail::scan_refine([&](double l) { return std::abs(fom_at(l, w_mod)); }, grid, scan.rel_tol,
                                          scan.tie_tol);
    if (!peak) return {scan.l_min, fom_at(scan.l_min, w_mod), w_mod, true};
    return {peak->x, fom_at(peak->x, w_mod), w_mod, false};
  }

  // joint: inner maximization over omega_mod at each length
  const double beta0 = velocity_from_kinetic(k, fe.kinetic_energy_ev).beta0;
  const auto w_grid = linspace(0.5 * beta0 * cav.omega_cav, 1.5 * cav.omega_cav, 201);
  auto best_mod = [&](double length) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < w_grid.size(); ++i) {
      const double v = std::abs(fom_at(length, w_grid[i]));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    const double a = w_grid[arg == 0 ? 0 : arg - 1];
    const double b = w_grid[std::min(arg + 1, w_grid.size() - 1)];
    const auto [w, v] = detail::golden_max_log([&](double wm) { return std::abs(fom_at(length, wm)); }, a, b, 1e-9);
    return v > best ? std::pair{w, v} : std::pair{w_grid[arg], best};
  };
  const auto peak = detail::scan_refine([&](double l) { return best_mod(l).second; }, grid, scan.rel_tol,
                                        scan.tie_tol);
  if (!peak) return {scan.l_min, fom_at(scan.l_min, cav.omega_cav), cav.omega_cav, true};
  const double w = best_mod(peak->x).first;
  return {peak->x, fom_at(peak->x, w), w, false};
}

struct BunchingCell {
  double bunching_abs;
  double bunching_phase;
  LengthOptimum optimum;
};

/// optimize_length over a (|b|, Psi_b) grid, row-major with |b| outermost.
inline std::vector<BunchingCell> bunching_sensitivity(const PhysicalConstants& k, const BoundElectronParams& be,
                                                      const CavityTemplate& cav, const std::vector<double>& b_grid,
                                                      const std::vector<double>& psi_grid, double kinetic_energy_ev,
                                                      const LengthScan& scan = {},
                                                      OmegaModPolicy policy = OmegaModPolicy::track_cavity,
                                                      unsigned threads = thread_budget()) {
  std::vector<BunchingCell> cells(b_grid.size() * psi_grid.size());
  parallel_for(
      cells.size(),
      [&](std::size_t idx) {
        const double b = b_grid[idx / psi_grid.size()];
        const double psi = psi_grid[idx % psi_grid.size()];
        const FreeElectronParams fe{kinetic_energy_ev, cav.omega_cav, b, psi};
        cells[idx] = {b, psi, optimize_length(k, fe, be, cav, scan, policy)};
      },
      threads);
  return cells;
}

} // namespace qilab::emission

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "qilab/emission/model.hpp"
#include "qilab/emission/optimize.hpp"
#include "qilab/emission/sweeps.hpp"
#include "qilab/oracle/perturbation.hpp"
#include "qilab/oracle/random.hpp"
#include "qilab/util/grid.hpp"

using namespace qilab;
using namespace qilab::emission;

namespace {

const PhysicalConstants& k = kCodata2018;
constexpr double kPi = std::numbers::pi;

// SnV-like emitter, 30 keV beam, omega_mod = omega_cav = omega_a
struct Snv {
  FreeElectronParams fe{30e3, 3e15, 0.99, 0.0};
  BoundElectronParams be{};
  CavityParams cav = CavityParams::with_default_volume(3e15, 1e-6);
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(Kinematics, FrozenValues) {
  const auto kin = velocity_from_kinetic(k, 30e3);
  EXPECT_NEAR(kin.beta0, 0.32837617636141299, 1e-14);
  EXPECT_NEAR(kin.tau(1e-6), 1.0157987065146565e-14, 1e-27);
  const double beta_nr = std::sqrt(2 * 100.0 / k.electron_rest_energy_ev());
  EXPECT_LT(rel(velocity_from_kinetic(k, 100.0).beta0, beta_nr), 1e-3);
  EXPECT_THROW(velocity_from_kinetic(k, 0.0), ValidationError);
}

TEST(Rates, ExactNullity) {
  Snv s;
  s.fe.bunching_abs = 0.0;
  EXPECT_EQ(rate_qi(k, s.fe, s.be, s.cav), 0.0);
  const auto r = rates(k, s.fe, s.be, s.cav);
  EXPECT_EQ(r.total, r.gamma_a + r.gamma_e);
  EXPECT_EQ(r.fom.value(), 0.0);

  Snv t;
  for (double theta : {0.0, kPi}) {
    t.be.theta_a = theta;
    EXPECT_EQ(rate_qi(k, t.fe, t.be, t.cav), 0.0);
  }
  EXPECT_EQ(companion_rates(k, t.fe, t.be, t.cav).gamma_a, 0.0);
}

TEST(Rates, LinearInBunchingAndCoherence) {
  Snv s;
  s.cav = CavityParams::with_default_volume(3e15, 3.3e-7);
  s.fe.bunching_abs = 0.3;
  const double a = rate_qi(k, s.fe, s.be, s.cav);
  s.fe.bunching_abs = 0.6;
  EXPECT_LT(rel(rate_qi(k, s.fe, s.be, s.cav), 2 * a), 1e-12);
  // |rho_eg| = sin(theta)/2 with every other factor fixed
  Snv u;
  u.be.theta_a = 0.4;
  const double b1 = rate_qi(k, u.fe, u.be, u.cav);
  u.be.theta_a = 1.1;
  EXPECT_LT(rel(rate_qi(k, u.fe, u.be, u.cav) / b1, std::sin(1.1) / std::sin(0.4)), 1e-12);
}

TEST(Rates, PhaseEntersOnlyThroughXi) {
  Snv s;
  s.cav = CavityParams::with_default_volume(3e15, 2.9e-7);
  s.fe.bunching_phase = 0.3;
  const auto base = rates(k, s.fe, s.be, s.cav);
  Snv t = s;
  t.be.phi_a += 0.7;
  t.fe.bunching_phase -= 0.7;
  const auto moved = rates(k, t.fe, t.be, t.cav);
  EXPECT_LT(rel(moved.gamma_ae, base.gamma_ae), 1e-12);
  EXPECT_EQ(moved.gamma_a, base.gamma_a);
  EXPECT_EQ(moved.gamma_e, base.gamma_e);

  Snv z = s;
  z.be.z_a = 40e-9;
  z.be.phi_a += s.cav.omega_cav * z.be.z_a / k.c;
  EXPECT_LT(rel(rates(k, z.fe, z.be, z.cav).gamma_ae, base.gamma_ae), 1e-12);

  Snv f = s;
  f.fe.bunching_phase += kPi;
  const auto flipped = rates(k, f.fe, f.be, f.cav);
  EXPECT_LT(rel(flipped.fom.value(), -base.fom.value()), 1e-12);
}

TEST(Rates, PositiveAtSnvDefaults) {
  Snv s;
  s.be.phi_a = kPi / 2; // xi = 0
  s.cav = CavityParams::with_default_volume(3e15, 3e-7);
  EXPECT_GT(rate_qi(k, s.fe, s.be, s.cav), 0.0);
}

TEST(Rates, CompanionCrossCheck) {
  oracle::CounterRng rng(77);
  for (int i = 0; i < 200; ++i) {
    Snv s;
    s.be.theta_a = 0.1 + 2.9 * rng.next_uniform();
    s.be.phi_a = 2 * kPi * rng.next_uniform();
    s.fe.bunching_abs = 0.05 + 0.95 * rng.next_uniform();
    s.fe.omega_mod = 3e15 * (0.2 + rng.next_uniform());
    s.cav = CavityParams::with_default_volume(3e15 * (0.9 + 0.2 * rng.next_uniform()), 1e-8 * std::pow(1e3, rng.next_uniform()));
    const auto r = rates(k, s.fe, s.be, s.cav);
    const auto g = rate_geometry(k, s.fe, s.be, s.cav);
    const double scale = s.be.rho_eg_abs() * s.fe.bunching_abs / std::sqrt(s.be.rho_ee());
    const double lhs = 2 * std::sqrt(r.gamma_a * r.gamma_e) * std::abs(std::cos(g.xi)) * scale;
    EXPECT_LT(rel(lhs, std::abs(r.gamma_ae)), 1e-10);
  }
}

TEST(Rates, CauchySchwarzAndPositivity) {
  oracle::CounterRng rng(13);
  for (int i = 0; i < 500; ++i) {
    Snv s;
    s.fe.kinetic_energy_ev = 100.0 * std::pow(1e4, rng.next_uniform());
    s.be.theta_a = kPi * rng.next_uniform();
    s.be.phi_a = 2 * kPi * rng.next_uniform();
    s.fe.bunching_abs = rng.next_uniform();
    s.fe.bunching_phase = 2 * kPi * rng.next_uniform();
    s.fe.omega_mod = 3e15 * 2 * rng.next_uniform();
    s.cav = CavityParams::with_default_volume(3e15 * (0.5 + rng.next_uniform()), 1e-9 * std::pow(1e6, rng.next_uniform()));
    const auto r = rates(k, s.fe, s.be, s.cav);
    EXPECT_LE(std::abs(r.gamma_ae), 2 * std::sqrt(r.gamma_a * r.gamma_e) * (1 + 1e-12));
    EXPECT_GE(r.total, -1e-12 * (r.gamma_a + r.gamma_e));
    EXPECT_GE(r.gamma_a, 0.0);
    EXPECT_GE(r.gamma_e, 0.0);
    if (r.fom) { EXPECT_LE(std::abs(*r.fom), 1.0 + 1e-12); }
  }
}

TEST(Rates, UndefinedFomIsFlagged) {
  Snv s;
  s.cav.mode_volume = 1e300;
  const auto r = rates(k, s.fe, s.be, s.cav);
  EXPECT_LT(r.gamma_a + r.gamma_e, 1e-300);
  EXPECT_FALSE(r.fom.has_value());
}

TEST(Rates, ValidationNamesTheField) {
  Snv s;
  s.fe.bunching_abs = 1.5;
  try {
    rates(k, s.fe, s.be, s.cav);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bunching_abs"), std::string::npos);
  }
  s = Snv{};
  s.be.theta_a = 4.0;
  EXPECT_THROW(rates(k, s.fe, s.be, s.cav), ValidationError);
  s = Snv{};
  s.cav.mode_volume = 0.0;
  EXPECT_THROW(rates(k, s.fe, s.be, s.cav), ValidationError);
}

TEST(Perturbation, MatchesClosedFormAtSnvDefaults) {
  Snv s;
  s.cav = CavityParams::with_default_volume(3e15, 3e-7);
  const auto closed = rates(k, s.fe, s.be, s.cav);
  const auto num = oracle::perturbation_integrator(k, s.fe, s.be, s.cav, 20000);
  EXPECT_LT(rel(num.gamma_a, closed.gamma_a), 1e-9);
  EXPECT_LT(rel(num.gamma_e, closed.gamma_e), 1e-9);
  EXPECT_LT(rel(num.gamma_ae, closed.gamma_ae), 1e-9);

  s.fe.bunching_phase += kPi;
  const auto flipped = oracle::perturbation_integrator(k, s.fe, s.be, s.cav, 20000);
  EXPECT_LT(rel(flipped.gamma_ae, -num.gamma_ae), 1e-9);
}

TEST(Perturbation, ZeroDetuningIntegratesToTau) {
  const complex i = oracle::detail::phase_integral(0.0, 2.5e-14, 1000);
  EXPECT_NEAR(i.real(), 2.5e-14, 1e-28);
  EXPECT_NEAR(i.imag(), 0.0, 1e-28);
}

TEST(Perturbation, RefusesUnresolvedOscillation) {
  Snv s;
  s.fe.omega_mod = 1e15;
  s.cav = CavityParams::with_default_volume(3e15, 1e-4);
  const auto need = oracle::required_steps(k, s.fe, s.be, s.cav);
  EXPECT_GT(need, 1000u);
  try {
    oracle::perturbation_integrator(k, s.fe, s.be, s.cav, 1000);
    FAIL();
  } catch (const NumericalGuardError& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(need)), std::string::npos);
  }
  EXPECT_THROW(oracle::perturbation_integrator(k, Snv{}.fe, Snv{}.be, Snv{}.cav, 999), ValidationError);
}

TEST(Optimize, UnshapedIsDegenerate) {
  Snv s;
  s.fe.bunching_abs = 0.0;
  const auto opt = optimize_length(k, s.fe, s.be, CavityTemplate{3e15, {}});
  EXPECT_TRUE(opt.degenerate);
  EXPECT_EQ(opt.gamma_max, 0.0);
}

TEST(Optimize, SnvGammaMaxAndLength) {
  Snv s;
  const auto opt = optimize_length(k, s.fe, s.be, CavityTemplate{3e15, {}});
  EXPECT_FALSE(opt.degenerate);
  EXPECT_GE(std::abs(opt.gamma_max), 0.65);
  EXPECT_LE(std::abs(opt.gamma_max), 0.75);
  // |rho_eg| |b| / sqrt(rho_ee) at the equator
  EXPECT_NEAR(opt.gamma_max, 0.99 / std::sqrt(2.0), 1e-9);
  EXPECT_LT(rel(opt.l_opt, 3.0521291440713555e-07), 1e-6);
  EXPECT_EQ(opt.omega_mod, 3e15);

  s.fe.bunching_abs = 0.58;
  EXPECT_GE(std::abs(optimize_length(k, s.fe, s.be, CavityTemplate{3e15, {}}).gamma_max), 0.4);
}

TEST(Optimize, FixedAndJointPolicies) {
  Snv s;
  const auto fixed = optimize_length(k, s.fe, s.be, CavityTemplate{3e15, {}}, {}, OmegaModPolicy::fixed);
  EXPECT_NEAR(std::abs(fixed.gamma_max), 0.99 / std::sqrt(2.0), 1e-9);
  LengthScan coarse;
  coarse.l_min = 1e-8;
  coarse.l_max = 1e-5;
  coarse.points = 60;
  const auto joint = optimize_length(k, s.fe, s.be, CavityTemplate{3e15, {}}, coarse, OmegaModPolicy::joint);
  EXPECT_GE(std::abs(joint.gamma_max), std::abs(fixed.gamma_max) - 1e-6);
  EXPECT_LE(std::abs(joint.gamma_max), 1.0);
}

TEST(Optimize, ScanValidation) {
  Snv s;
  LengthScan bad;
  bad.l_min = 1e-3;
  bad.l_max = 1e-6;
  EXPECT_THROW(optimize_length(k, s.fe, s.be, CavityTemplate{}, bad), ValidationError);
}

TEST(Bunching, RowsFollowCosPsi) {
  Snv s;
  LengthScan scan;
  scan.l_min = 1e-8;
  scan.l_max = 1e-5;
  const std::vector<double> psi = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const auto cells = bunching_sensitivity(k, s.be, CavityTemplate{3e15, {}}, {0.0, 0.58, 0.99}, psi, 30e3, scan);
  ASSERT_EQ(cells.size(), 21u);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    EXPECT_EQ(cells[j].optimum.gamma_max, 0.0);
    EXPECT_TRUE(cells[j].optimum.degenerate);
    EXPECT_NEAR(cells[7 + j].optimum.gamma_max, 0.58 / std::sqrt(2.0) * std::cos(psi[j]), 1e-8);
    EXPECT_NEAR(cells[14 + j].optimum.gamma_max, 0.99 / std::sqrt(2.0) * std::cos(psi[j]), 1e-8);
  }
}

TEST(Bloch, RimsShiftAndEquator) {
  Snv s;
  s.cav = CavityParams::with_default_volume(3e15, 3e-7);
  const auto theta = linspace(0.0, kPi, 13);
  std::vector<double> phi;
  for (int i = 0; i < 24; ++i) phi.push_back(2 * kPi * i / 24);
  const auto a = bloch_map(k, s.fe, s.be, s.cav, theta, phi);
  s.fe.bunching_phase = 2 * kPi * 5 / 24;
  const auto b = bloch_map(k, s.fe, s.be, s.cav, theta, phi);
  for (std::size_t t = 0; t < theta.size(); ++t)
    for (std::size_t p = 0; p < phi.size(); ++p) {
      const auto& cell = a[t * phi.size() + p];
      if (t == 0 || t + 1 == theta.size()) { EXPECT_EQ(cell.fom_abs(), 0.0); }
      const auto& moved = b[t * phi.size() + (p + 24 - 5) % 24];
      EXPECT_NEAR(moved.rates.fom.value(), cell.rates.fom.value(), 1e-12);
    }
  BoundElectronParams eq;
  eq.theta_a = kPi / 2;
  EXPECT_EQ(eq.rho_eg_abs(), 0.5);

  // |fom| along a meridian peaks inside the sphere
  std::size_t best = 0;
  for (std::size_t t = 0; t < theta.size(); ++t)
    if (a[t * phi.size()].fom_abs() > a[best * phi.size()].fom_abs()) best = t;
  EXPECT_GT(best, 0u);
  EXPECT_LT(best, theta.size() - 1);

  EXPECT_THROW(bloch_map(k, s.fe, s.be, s.cav, {3.5}, phi), ValidationError);
  EXPECT_THROW(bloch_map(k, s.fe, s.be, s.cav, theta, {2 * kPi}), ValidationError);
}

TEST(Resonance, SweepShapes) {
  Snv s;
  const auto l = logspace(1e-7, 1e-4, 40);
  const auto w = linspace(2.7e15, 3.3e15, 61);
  const auto cells = resonance_sweep(k, s.fe, s.be, CavityTemplate{3e15, 1e-18}, l, w);
  ASSERT_EQ(cells.size(), l.size() * w.size());
  // on-resonance column holds the largest Gamma_a at each long length
  for (std::size_t i = 20; i < l.size(); ++i) {
    std::size_t arg = 0;
    for (std::size_t j = 0; j < w.size(); ++j)
      if (cells[i * w.size() + j].rates.gamma_a > cells[i * w.size() + arg].rates.gamma_a) arg = j;
    EXPECT_EQ(arg, 30u) << "L=" << l[i];
  }
  // far off resonance the atom rate follows the 1/(detuning tau)^2 envelope
  const auto& far = cells[39 * w.size()];
  const auto& on = cells[39 * w.size() + 30];
  const double x = (2.7e15 - 3e15) * velocity_from_kinetic(k, 30e3).tau(1e-4) / 2;
  EXPECT_LE(far.rates.gamma_a / on.rates.gamma_a, 3.0e15 / 2.7e15 / (x * x) * (1 + 1e-9));

  // the QI rate changes sign with L at fixed omega_cav
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double d = cells[i * w.size() + 30].rates.total - cells[i * w.size() + 30].rates.gamma_a -
                     cells[i * w.size() + 30].rates.gamma_e;
    pos = pos || d > 0;
    neg = neg || d < 0;
  }
  EXPECT_TRUE(pos && neg);
  EXPECT_THROW(resonance_sweep(k, s.fe, s.be, CavityTemplate{}, l, w, OmegaModPolicy::joint), ValidationError);
}

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "qilab/core/decompose.hpp"
#include "qilab/oracle/bessel_reference.hpp"
#include "qilab/pinem/ladder.hpp"
#include "qilab/pinem/spectrum.hpp"

using namespace qilab;
using namespace qilab::pinem;

namespace {

double square(double x) { return x * x; }

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

} // namespace

TEST(Comb, UnshapedIsSinglePeak) {
  const auto c = initial_amplitudes({0.0, 0.4, 0});
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.label(i) == 0)
      EXPECT_NEAR(std::abs(c.amplitude(i) - std::polar(1.0, 0.4)), 0.0, 1e-15);
    else
      EXPECT_EQ(c.amplitude(i), complex(0.0, 0.0));
  }
}

TEST(Comb, FrozenAmplitudes) {
  const auto c = initial_amplitudes({0.5, 0.0, 0});
  auto amp = [&](int n) {
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.label(i) == n) return c.amplitude(i);
    return complex(0.0, 0.0);
  };
  EXPECT_NEAR(amp(0).real(), 0.76519768655796655, 1e-10);
  EXPECT_NEAR(amp(1).real(), 0.44005058574493352, 1e-10);
  EXPECT_NEAR(amp(-1).real(), -0.44005058574493352, 1e-10);
  EXPECT_NEAR(amp(2).real(), 0.11490348493190049, 1e-10);
  EXPECT_NEAR(amp(-2).real(), 0.11490348493190049, 1e-10);
}

TEST(Comb, NormalizedAndWideEnough) {
  for (double gm : {0.0, 0.3, 2.0, 11.0}) {
    const auto c = initial_amplitudes({std::polar(gm, 1.1), 0.2, 0});
    EXPECT_NEAR(c.norm_squared(), 1.0, 1e-10);
    double held = 0.0;
    for (int n = c.min_label(); n <= c.max_label(); ++n) held += square(oracle::bessel_j_series(n, 2 * gm));
    EXPECT_GE(held, 1.0 - 1e-10) << gm;
  }
  // a narrow request is widened
  const auto c = initial_amplitudes({3.0, 0.0, 1});
  EXPECT_GT(c.max_label(), 1);
}

TEST(SMatrix, IdentityAtZeroCoupling) {
  const InteractionCoupling zero(0.0);
  for (int big_n = -3; big_n <= 3; ++big_n)
    for (int n = -3; n <= 3; ++n)
      EXPECT_EQ(s_matrix_element(big_n, n, zero), big_n == n ? complex(1.0, 0.0) : complex(0.0, 0.0));
}

TEST(SMatrix, FrozenElementAndPhase) {
  const InteractionCoupling g(0.7);
  EXPECT_NEAR(s_matrix_element(4, 4, g).real(), 0.56685512037428877, 1e-15);
  const InteractionCoupling gp(std::polar(0.7, 0.3));
  const complex e = s_matrix_element(2, 0, gp);
  EXPECT_NEAR(std::abs(e - oracle::bessel_j_series(2, 1.4) * std::polar(1.0, -0.6)), 0.0, 1e-15);
}

TEST(SMatrix, UnitarityAndShiftCovariance) {
  const InteractionCoupling g(std::polar(0.7, -0.9));
  for (int n : {-5, 0, 13}) {
    double col = 0.0;
    for (int big_n = n - 40; big_n <= n + 40; ++big_n) col += std::norm(s_matrix_element(big_n, n, g));
    EXPECT_NEAR(col, 1.0, 1e-12);
    EXPECT_EQ(s_matrix_element(n + 3, n, g), s_matrix_element(3, 0, g));
  }
}

TEST(SMatrix, CouplingGuard) {
  EXPECT_THROW(InteractionCoupling(51.0), ValidationError);
  EXPECT_THROW(InteractionCoupling(complex(std::nan(""), 0.0)), ValidationError);
}

TEST(Spectrum, ZeroLossPeakVanishes) {
  const auto s = spectrum(ModulationParams{0.5, 0.0, 0}, InteractionCoupling(0.7));
  EXPECT_LT(s.with(0), 1e-4);
  EXPECT_NEAR(s.with(0), 6.2884755192758336e-06, 1e-15);
  EXPECT_NEAR(s.without(0), 0.30303139226984850, 1e-12);
  for (int n = s.window.lo; n <= s.window.hi; ++n) {
    if (n != 0) { EXPECT_GT(s.without(0), s.without(n)) << n; }
  }
  EXPECT_NEAR(s.without(1), 0.24645045047233029, 1e-12);
  EXPECT_NEAR(s.with(1), 0.27059271323350753, 1e-12);
}

TEST(Spectrum, UnshapedCoincides) {
  for (double g : {0.1, 0.7, 3.0}) {
    const auto s = spectrum(ModulationParams{0.0, 0.0, 0}, InteractionCoupling(std::polar(g, 0.4)));
    for (int n = s.window.lo; n <= s.window.hi; ++n) EXPECT_LT(std::abs(s.with(n) - s.without(n)), 1e-14);
  }
}

TEST(Spectrum, CompletenessAndZeroSumQi) {
  for (double g : {0.2, 0.7, 2.5})
    for (double gm : {0.0, 0.5, 1.7}) {
      const auto s = spectrum(ModulationParams{std::polar(gm, 0.8), 0.3, 0}, InteractionCoupling(std::polar(g, -0.2)));
      EXPECT_NEAR(sum(s.with_qi), 1.0, 1e-8);
      EXPECT_NEAR(sum(s.without_qi), 1.0, 1e-8);
      double qi = 0.0;
      for (int n = s.window.lo; n <= s.window.hi; ++n) {
        qi += s.qi_term(n);
        EXPECT_GE(s.without(n), 0.0);
        EXPECT_GE(s.with(n), 0.0);
      }
      EXPECT_LT(std::abs(qi), 1e-10);
    }
}

TEST(Spectrum, CompositionLaws) {
  for (double g : {0.3, 0.7, 1.6})
    for (double gm : {0.2, 0.5, 1.1})
      for (double arg : {0.0, 1.3}) {
        const auto aligned = spectrum(ModulationParams{std::polar(gm, arg), 0.0, 0}, InteractionCoupling(std::polar(g, arg)));
        const auto anti = spectrum(ModulationParams{std::polar(gm, arg + std::numbers::pi), 0.0, 0},
                                   InteractionCoupling(std::polar(g, arg)));
        for (int n = aligned.window.lo; n <= aligned.window.hi; ++n) {
          EXPECT_NEAR(aligned.with(n), square(oracle::bessel_j_series(n, 2 * (g + gm))), 1e-10);
          EXPECT_NEAR(anti.with(n), square(oracle::bessel_j_series(n, 2 * std::abs(g - gm))), 1e-10);
        }
      }
}

TEST(Spectrum, GlobalRelabelingInvariance) {
  const auto comb = initial_amplitudes({std::polar(0.5, 0.2), 0.0, 0});
  std::vector<int> shifted;
  for (int l : comb.labels()) shifted.push_back(l + 7);
  const SystemState moved(shifted, comb.amplitudes());
  const InteractionCoupling g(std::polar(0.9, 0.2));
  const auto a = spectrum(comb, g, LabelWindow::symmetric(30));
  const auto b = spectrum(moved, g, {-23, 37});
  for (int n = -30; n <= 30; ++n) {
    EXPECT_NEAR(a.with(n), b.with(n + 7), 1e-15);
    EXPECT_NEAR(a.without(n), b.without(n + 7), 1e-15);
  }
}

TEST(Spectrum, MatchesQiCorePerLabel) {
  const auto comb = initial_amplitudes({std::polar(0.5, 0.0), 0.0, 0});
  const InteractionCoupling g(0.7);
  const auto w = LabelWindow::symmetric(10);
  const auto s = spectrum(comb, g, w);
  const LadderShiftOperator op(g, LabelWindow::symmetric(30), {comb.min_label(), comb.max_label()});
  for (const auto& [label, terms] : marginal_spectrum(ProductState{comb}, op, 0, w)) {
    EXPECT_NEAR(terms.total(), s.with(label), 1e-12);
    EXPECT_NEAR(terms.without_qi(), s.without(label), 1e-12);
    EXPECT_NEAR(direct_probability(ProductState{comb}, op, FinalSelector::all_fixed({label})), s.with(label), 1e-12);
  }
}

TEST(Spectrum, NarrowWindowIsAGuard) {
  try {
    spectrum(ModulationParams{0.5, 0.0, 0}, InteractionCoupling(3.0), LabelWindow::symmetric(3));
    FAIL() << "expected a guard";
  } catch (const NumericalGuardError& e) {
    EXPECT_NE(std::string(e.what()).find("half-width"), std::string::npos);
  }
}

TEST(Sweep, ZlpZeroAtFirstBesselZero) {
  std::vector<complex> gs;
  for (int i = 0; i <= 15; ++i) gs.push_back(0.1 * i);
  const auto rows = coupling_sweep(ModulationParams{0.5, 0.0, 0}, gs);
  for (const auto& r : rows) {
    if (r.g_abs == 0.0) { EXPECT_NEAR(r.with_qi, r.without_qi, 1e-15); }
  }

  // on the 0.1 grid, 0.7 is the nearest point to the zero
  double best_g = -1.0;
  double best = 1.0;
  for (const auto& r : rows)
    if (r.n == 0 && r.with_qi < best) {
      best = r.with_qi;
      best_g = r.g_abs;
    }
  EXPECT_NEAR(best_g, 0.7, 1e-12);

  const double g0 = 0.70241277884788638;
  const auto at_zero = spectrum(ModulationParams{0.5, 0.0, 0}, InteractionCoupling(g0));
  EXPECT_LT(at_zero.with(0), 1e-5);
  EXPECT_LT(at_zero.with(0), 1e-20);
}

TEST(Sweep, SuppressionAwayFromZlp) {
  // J_1(2(|G| + 0.5)) vanishes at |G| = 1.4158530
  const auto s = spectrum(ModulationParams{0.5, 0.0, 0}, InteractionCoupling(1.4158529851037562));
  for (int n : {-1, 1}) {
    EXPECT_LT(s.with(n), 1e-4);
    EXPECT_GT(s.without(n), 1e-3);
    EXPECT_NEAR(s.without(n), 0.14862238132448373, 1e-12);
  }
}

TEST(Sweep, StreamsInDeterministicOrder) {
  std::vector<SweepRow> rows;
  coupling_sweep(ModulationParams{0.5, 0.0, 0}, {0.2, 0.4}, LabelWindow::symmetric(25),
                 [&](const SweepRow& r) { rows.push_back(r); });
  ASSERT_EQ(rows.size(), 2u * 51u);
  EXPECT_EQ(rows.front().n, -25);
  EXPECT_DOUBLE_EQ(rows.front().g_abs, 0.2);
  EXPECT_EQ(rows.back().n, 25);
  EXPECT_DOUBLE_EQ(rows.back().g_abs, 0.4);
}

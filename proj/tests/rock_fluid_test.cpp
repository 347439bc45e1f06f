#include "sfisim/rock_fluid.hpp"

#include <gtest/gtest.h>

#include <random>

#include "sfisim/units.hpp"
#include "test_util.hpp"

using namespace sfisim;

namespace {

RockFluidModel two_phase_model(double n_exp = 2.0) {
  RockFluidModel m;
  m.p_ref = units::psi_to_pa(2000.0);
  m.rock_compressibility = units::per_psi_to_per_pa(1e-6);
  m.poro_ref = Eigen::ArrayXd::Constant(1, 0.1);
  m.phases = {
      {"water", 1.0, 0.0, units::cp_to_pas(1.0), 1000.0, n_exp},
      {"oil", 1.0, units::per_psi_to_per_pa(6.9e-6), units::cp_to_pas(4.0),
       500.0, n_exp}};
  return m;
}

RockFluidModel three_phase_model(double n_exp = 3.0) {
  RockFluidModel m = two_phase_model(n_exp);
  m.phases.push_back({"gas", 1.0, units::per_psi_to_per_pa(6.9e-5),
                      units::cp_to_pas(0.25), 100.0, n_exp});
  return m;
}

}  // namespace

TEST(BFactor, ReferencePressureGivesBRef) {
  const auto m = two_phase_model();
  const auto b = b_of_p(m.phases[1], m.p_ref, m.p_ref);
  EXPECT_DOUBLE_EQ(b.value, 1.0);
}

TEST(BFactor, IncompressiblePhaseIsConstant) {
  const auto m = two_phase_model();
  for (double dp : {-3e7, 0.0, 1e5, 4e7}) {
    const auto b = b_of_p(m.phases[0], m.p_ref + dp, m.p_ref);
    EXPECT_DOUBLE_EQ(b.value, 1.0);
    EXPECT_DOUBLE_EQ(b.deriv, 0.0);
  }
}

TEST(BFactor, OilCompressibilityExponential) {
  const auto m = two_phase_model();
  // 6.9e-6 1/psi over a 1e5 psi rise gives exactly exp(0.69).
  const double p = m.p_ref + units::psi_to_pa(1.0e5);
  const auto b = b_of_p(m.phases[1], p, m.p_ref);
  EXPECT_NEAR(b.value, std::exp(0.69), 1e-12);

  const double h = 1.0;  // Pa
  const double fd = (b_of_p(m.phases[1], p + h, m.p_ref).value -
                     b_of_p(m.phases[1], p - h, m.p_ref).value) /
                    (2.0 * h);
  EXPECT_NEAR(b.deriv, fd, 1e-6 * std::abs(fd));
}

TEST(Porosity, ReferenceAndIncompressibleRock) {
  auto m = two_phase_model();
  EXPECT_DOUBLE_EQ(porosity(m, m.p_ref, 0).value, 0.1);
  m.rock_compressibility = 0.0;
  EXPECT_DOUBLE_EQ(porosity(m, m.p_ref + 4e7, 0).value, 0.1);
}

TEST(Porosity, RockCompressibilityExponential) {
  const auto m = two_phase_model();
  // 1e-6 1/psi over 1e6 psi gives a factor of e.
  const double p = m.p_ref + units::psi_to_pa(1.0e6);
  EXPECT_NEAR(porosity(m, p, 0).value, 0.1 * std::exp(1.0), 1e-12);
}

TEST(RelPerm, TwoPhaseQuadratic) {
  const auto m = two_phase_model(2.0);
  const auto kr = relperm(m, {0.5, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(kr.kr[0], 0.25);
  EXPECT_DOUBLE_EQ(kr.kr[1], 0.25);
}

TEST(RelPerm, CubicGas) {
  const auto m = three_phase_model(3.0);
  const auto kr = relperm(m, {0.5, 0.3, 0.2});
  EXPECT_NEAR(kr.kr[2], 0.008, 1e-15);
}

TEST(RelPerm, BakerCollapsesToOilCurve) {
  // With k_row = k_rog the interpolation returns s_o^n for any water/gas split.
  const auto m = three_phase_model(2.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double so = 0.1 + 0.8 * u(rng);
    const double w = u(rng);
    const double sw = (1.0 - so) * w;
    const double sg = (1.0 - so) * (1.0 - w);
    const auto kr = relperm(m, {sw, so, sg});
    EXPECT_NEAR(kr.kr[1], so * so, 1e-14);
  }
}

TEST(RelPerm, BakerLimitContinuousAtVanishingWaterGas) {
  const auto m = three_phase_model(2.0);
  const double so = 1.0;
  const auto at_limit = relperm(m, {0.0, so, 0.0});
  for (double t : {1e-3, 1e-6, 1e-9}) {
    const auto kr = relperm(m, {0.3 * t, 1.0 - t, 0.7 * t});
    EXPECT_NEAR(kr.kr[1], at_limit.kr[1], 5.0 * t);
  }
}

TEST(RelPerm, OutOfRangeSaturationThrows) {
  const auto m = two_phase_model();
  EXPECT_THROW(relperm(m, {-1e-3, 1.0, 0.0}), std::domain_error);
  EXPECT_THROW(relperm(m, {0.2, 1.0 + 1e-3, 0.0}), std::domain_error);
  // Within tolerance, clamped instead.
  EXPECT_NO_THROW(relperm(m, {-1e-11, 1.0, 0.0}));
}

TEST(RelPerm, MonotoneInOwnSaturation) {
  const auto m = three_phase_model(3.0);
  double prev_w = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double sw = k / 20.0;
    const auto kr = relperm(m, {sw, (1.0 - sw) * 0.5, (1.0 - sw) * 0.5});
    EXPECT_GE(kr.kr[0], prev_w);
    prev_w = kr.kr[0];
  }
}

TEST(Mobility, Values) {
  auto m = two_phase_model(2.0);
  m.phases[0].viscosity = 1e-3;
  const auto mob = mobility(m, {0.5, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(mob.kr[0], 250.0);  // 0.25 / 1e-3

  const auto zero = mobility(m, {0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(zero.kr[0], 0.0);

  m.phases[1].viscosity = units::cp_to_pas(4.0);
  const auto direct = mobility(m, {0.4, 0.6, 0.0});
  EXPECT_NEAR(direct.kr[1], 0.36 / 0.004, 1e-10);
}

TEST(Derivatives, MatchCentralDifferencesAtRandomStates) {
  for (int np = 2; np <= 3; ++np) {
    const auto m = np == 2 ? two_phase_model(2.0) : three_phase_model(3.0);
    std::mt19937_64 rng(123 + np);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
      const auto s = sfitest::random_sats(rng, np, 0.08);
      const auto kr = relperm(m, s);
      for (int l = 0; l < np; ++l) {
        for (int k = 0; k < np; ++k) {
          auto sp = s, sm = s;
          sp[k] += h;
          sm[k] -= h;
          const double fd = (relperm(m, sp).kr[l] - relperm(m, sm).kr[l]) /
                            (2.0 * h);
          const double scale = std::max(1.0, std::abs(fd));
          EXPECT_NEAR(kr.dkr[l][k], fd, 1e-6 * scale)
              << "phase " << l << " wrt " << k;
        }
      }
    }
  }
}

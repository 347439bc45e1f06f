#include "sfisim/flux.hpp"

#include <gtest/gtest.h>

#include <random>

#include "sfisim/units.hpp"
#include "test_util.hpp"

using namespace sfisim;

namespace {

RockFluidModel make_model(int np, std::array<double, 3> visc_pas,
                          std::array<double, 3> dens,
                          std::array<double, 3> compr = {0, 0, 0},
                          double n_exp = 2.0) {
  RockFluidModel m;
  m.p_ref = 1e7;
  m.poro_ref = Eigen::ArrayXd::Constant(2, 0.1);
  const char* names[3] = {"water", "oil", "gas"};
  for (int l = 0; l < np; ++l)
    m.phases.push_back({names[l], 1.0, compr[l], visc_pas[l], dens[l], n_exp});
  return m;
}

FaceContext context(const RockFluidModel& m, double trans, double dz,
                    double p_i, double p_j, std::array<double, 3> s_i,
                    std::array<double, 3> s_j, SeedFlags seed = {}) {
  Face f;
  f.i = 0;
  f.j = 1;
  f.trans = trans;
  f.dz = dz;
  return make_face_context(m, f, p_i, p_j, s_i, s_j, seed);
}

}  // namespace

TEST(TotalVelocity, DirectSubstitution) {
  // Equal mobilities both sides (lambda = 1), potential drops 3 and 1.
  const auto m = make_model(2, {0.25, 0.25, 0}, {2.0, 4.0, 0});
  const double dz = 1.0 / units::gravity;  // g_w = 2, g_o = 4
  const auto ctx = context(m, 2.0, dz, 5.0 + m.p_ref, m.p_ref, {0.5, 0.5, 0},
                           {0.5, 0.5, 0});
  EXPECT_NEAR(total_velocity(ctx).v, 8.0, 1e-12);
}

TEST(TotalVelocity, ZeroAtFlatPotential) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0});
  const auto ctx =
      context(m, 2.0, 0.0, m.p_ref, m.p_ref, {0.4, 0.6, 0}, {0.7, 0.3, 0});
  EXPECT_DOUBLE_EQ(total_velocity(ctx).v, 0.0);
}

TEST(TotalVelocity, ZeroMobilityGivesZero) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0});
  const auto ctx =
      context(m, 2.0, 0.5, m.p_ref + 1e4, m.p_ref, {0, 0, 0}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(total_velocity(ctx).v, 0.0);
}

TEST(PpuFlux, UpwindSideSelection) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {1000.0, 1000.0, 0});
  // No gravity contrast; positive potential drop picks side i.
  auto ctx = context(m, 1.0, 0.0, m.p_ref + 100.0, m.p_ref, {0.8, 0.2, 0},
                     {0.2, 0.8, 0});
  auto flux = phase_flux_ppu(ctx);
  EXPECT_EQ(flux.upwind[0], 0);
  EXPECT_NEAR(flux.F[0].v, 1.0 * (0.64 / 1e-3) * 100.0, 1e-9);

  ctx = context(m, 1.0, 0.0, m.p_ref, m.p_ref + 100.0, {0.8, 0.2, 0},
                {0.2, 0.8, 0});
  flux = phase_flux_ppu(ctx);
  EXPECT_EQ(flux.upwind[0], 1);
  EXPECT_NEAR(flux.F[0].v, -1.0 * (0.04 / 1e-3) * 100.0, 1e-9);

  ctx = context(m, 1.0, 0.0, m.p_ref, m.p_ref, {0.8, 0.2, 0}, {0.2, 0.8, 0});
  flux = phase_flux_ppu(ctx);
  EXPECT_DOUBLE_EQ(flux.F[0].v, 0.0);
  EXPECT_DOUBLE_EQ(flux.F[1].v, 0.0);
}

TEST(PpuFlux, DirectValue) {
  // Upwind mobility 0.5 against a potential drop of 4.
  const auto m = make_model(2, {0.5, 1e30, 0}, {1000.0, 1000.0, 0});
  const auto ctx = context(m, 1.0, 0.0, m.p_ref + 4.0, m.p_ref,
                           {0.5, 0.5, 0}, {0.1, 0.9, 0});
  const auto flux = phase_flux_ppu(ctx);
  EXPECT_NEAR(flux.F[0].v, 2.0, 1e-12);
}

TEST(PpuFlux, SumEqualsTotalVelocityAtRandomStates) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int np = 2; np <= 3; ++np) {
    const auto m = np == 2
                       ? make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0})
                       : make_model(3, {1e-3, 1e-3, 2.5e-4},
                                    {1000.0, 500.0, 100.0}, {0, 0, 0}, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto ctx = context(
          m, 1e-12 * (1.5 + u(rng)), 3.0 * u(rng), m.p_ref + 1e4 * u(rng),
          m.p_ref + 1e4 * u(rng), sfitest::random_sats(rng, np),
          sfitest::random_sats(rng, np));
      const auto flux = phase_flux_ppu(ctx);
      double sum = 0.0;
      for (int l = 0; l < np; ++l) sum += flux.F[l].v;
      const double ut = total_velocity(ctx).v;
      EXPECT_NEAR(sum, ut, 1e-12 * std::max(1.0, std::abs(ut)));
    }
  }
}

TEST(HuFlux, EqualFractionalFlowSplitsTotalVelocity) {
  const auto m = make_model(2, {0.25, 0.25, 0}, {800.0, 800.0, 0});
  const auto ctx =
      context(m, 1.0, 0.0, m.p_ref, m.p_ref, {0.5, 0.5, 0}, {0.5, 0.5, 0});
  const auto flux = phase_flux_hu(ctx, FaceDual(2.0));
  EXPECT_NEAR(flux.F[0].v, 1.0, 1e-12);
  EXPECT_NEAR(flux.F[1].v, 1.0, 1e-12);
}

TEST(HuFlux, BuoyancyPairExchange) {
  // Stagnant face: counter-current exchange only. lambda_w (upper) = 2,
  // lambda_o (lower) = 2, g_o - g_w = 3.
  const auto m = make_model(2, {0.5, 0.5, 0}, {1000.0, 500.0, 0});
  const double dz = 3.0 / (-500.0 * units::gravity);  // (rho_o - rho_w) g dz = 3
  const auto ctx =
      context(m, 1.0, dz, m.p_ref, m.p_ref, {1.0, 0.0, 0}, {0.0, 1.0, 0});
  const auto flux = phase_flux_hu(ctx, FaceDual(0.0));
  EXPECT_NEAR(flux.F[0].v, 3.0, 1e-12);
  EXPECT_NEAR(flux.F[1].v, -3.0, 1e-12);
}

TEST(HuFlux, SingleMobilePhaseTakesAllFlux) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {900.0, 900.0, 0});
  const auto ctx =
      context(m, 1.0, 0.0, m.p_ref, m.p_ref, {1.0, 0.0, 0}, {1.0, 0.0, 0});
  const auto flux = phase_flux_hu(ctx, FaceDual(0.37));
  EXPECT_NEAR(flux.F[0].v, 0.37, 1e-14);
  EXPECT_DOUBLE_EQ(flux.F[1].v, 0.0);
}

TEST(HuFlux, StagnantFaceFlagged) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {900.0, 500.0, 0});
  const auto ctx =
      context(m, 1.0, 0.0, m.p_ref, m.p_ref, {0, 0, 0}, {0, 0, 0});
  const auto flux = phase_flux_hu(ctx, FaceDual(0.0));
  EXPECT_TRUE(flux.stagnant);
  EXPECT_DOUBLE_EQ(flux.F[0].v, 0.0);
}

TEST(HuFlux, PartitionOfTotalFlux) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int np = 2; np <= 3; ++np) {
    const auto m = np == 2
                       ? make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0})
                       : make_model(3, {1e-3, 1e-3, 2.5e-4},
                                    {1000.0, 500.0, 100.0}, {0, 0, 0}, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto ctx = context(m, 1e-12 * (1.5 + u(rng)), 3.0 * u(rng),
                               m.p_ref + 1e4 * u(rng), m.p_ref + 1e4 * u(rng),
                               sfitest::random_sats(rng, np),
                               sfitest::random_sats(rng, np));
      const double ut = 1e-9 * u(rng);
      const auto flux = phase_flux_hu(ctx, FaceDual(ut));
      double sum = 0.0;
      for (int l = 0; l < np; ++l) sum += flux.F[l].v;
      EXPECT_NEAR(sum, ut, 1e-12 * std::max(1.0, std::abs(ut)));
    }
  }
}

TEST(Flux, ConservationAntisymmetryUnderOrientationFlip) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int np = 2; np <= 3; ++np) {
    const auto m = np == 2
                       ? make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0},
                                    {1e-9, 2e-9, 0})
                       : make_model(3, {1e-3, 1e-3, 2.5e-4},
                                    {1000.0, 500.0, 100.0}, {1e-9, 2e-9, 9e-9},
                                    3.0);
    for (int trial = 0; trial < 40; ++trial) {
      const double trans = 1e-12 * (1.5 + u(rng));
      const double dz = 3.0 * u(rng);
      const double pi = m.p_ref + 1e4 * u(rng);
      const double pj = m.p_ref + 1e4 * u(rng);
      const auto si = sfitest::random_sats(rng, np);
      const auto sj = sfitest::random_sats(rng, np);
      const auto fwd = context(m, trans, dz, pi, pj, si, sj);
      const auto rev = context(m, trans, -dz, pj, pi, sj, si);
      const double ut = 1e-9 * u(rng);

      const auto ppu_f = phase_flux_ppu(fwd);
      const auto ppu_r = phase_flux_ppu(rev);
      const auto hu_f = phase_flux_hu(fwd, FaceDual(ut));
      const auto hu_r = phase_flux_hu(rev, FaceDual(-ut));
      for (int l = 0; l < np; ++l) {
        EXPECT_NEAR(ppu_f.F[l].v, -ppu_r.F[l].v, 1e-20);
        EXPECT_NEAR(hu_f.F[l].v, -hu_r.F[l].v, 1e-20);
        EXPECT_NEAR(hu_f.bF[l].v, -hu_r.bF[l].v, 1e-20);
      }
      EXPECT_NEAR(total_velocity(fwd).v, -total_velocity(rev).v, 1e-20);
    }
  }
}

// Along a joint (p,s) path, the PPU selector of the water phase flips. The
// hybrid flux at frozen total velocity keeps a continuous derivative across
// the flip; the PPU flux value stays continuous but its slope jumps.
TEST(Flux, HuSmoothAcrossPpuUpwindFlip) {
  const auto m = make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0});
  const double ut = 1e-9;

  auto eval = [&](double theta) {
    const double pi = m.p_ref + theta;
    const std::array<double, 3> si = {0.3 + 1e-5 * theta,
                                      0.7 - 1e-5 * theta, 0};
    const std::array<double, 3> sj = {0.8, 0.2, 0};
    const auto ctx = context(m, 1e-12, 0.0, pi, m.p_ref, si, sj);
    return std::pair{phase_flux_ppu(ctx).F[0].v,
                     phase_flux_hu(ctx, FaceDual(ut)).F[0].v};
  };

  // The flip sits at theta = 0 (potential drop changes sign there).
  const double h = 1e-3;
  const auto [ppu_m, hu_m] = eval(-h);
  const auto [ppu_0, hu_0] = eval(0.0);
  const auto [ppu_p, hu_p] = eval(h);

  // PPU flux vanishes with the potential drop; value is continuous.
  EXPECT_NEAR(ppu_m, ppu_0, 1e-12);
  EXPECT_NEAR(ppu_p, ppu_0, 1e-12);

  // HU continuity: the spread across the flip shrinks linearly under
  // refinement instead of plateauing at a jump.
  double prev_spread = std::abs(eval(1e-3).second - eval(-1e-3).second);
  for (double hh : {1e-4, 1e-5}) {
    const double spread = std::abs(eval(hh).second - eval(-hh).second);
    EXPECT_LE(spread, 0.2 * prev_spread + 1e-24);
    prev_spread = spread;
  }

  // One-sided slopes: HU matches, PPU kinks (mobilities differ across sides).
  const double hu_slope_l = (hu_0 - hu_m) / h;
  const double hu_slope_r = (hu_p - hu_0) / h;
  const double ppu_slope_l = (ppu_0 - ppu_m) / h;
  const double ppu_slope_r = (ppu_p - ppu_0) / h;
  EXPECT_NEAR(hu_slope_l, hu_slope_r,
              1e-3 * std::max(std::abs(hu_slope_l), 1e-30));
  EXPECT_GT(std::abs(ppu_slope_l - ppu_slope_r),
            0.5 * std::max(std::abs(ppu_slope_l), std::abs(ppu_slope_r)));
}

TEST(Flux, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int np = 2; np <= 3; ++np) {
    const auto m =
        np == 2 ? make_model(2, {1e-3, 4e-3, 0}, {1000.0, 500.0, 0},
                             {2e-10, 1e-9, 0})
                : make_model(3, {1e-3, 1e-3, 2.5e-4}, {1000.0, 500.0, 100.0},
                             {2e-10, 1e-9, 9e-9}, 3.0);
    const int nr = np - 1;
    int done = 0;
    while (done < 25) {
      const double trans = 1e-12 * (1.5 + u(rng));
      const double dz = 3.0 * (0.2 + std::abs(u(rng)));
      double pi = m.p_ref + 2e4 * u(rng);
      double pj = m.p_ref + 2e4 * u(rng);
      auto si = sfitest::random_sats(rng, np, 0.1);
      auto sj = sfitest::random_sats(rng, np, 0.1);
      const double ut = 2e-9 * u(rng);

      // Stay away from upwind switches.
      const auto probe = context(m, trans, dz, pi, pj, si, sj);
      bool safe = std::abs(total_velocity(probe).v) > 1e-12 &&
                  std::abs(ut) > 1e-12;
      for (int l = 0; l < np; ++l)
        safe = safe && std::abs(probe.pot_diff(l).v) > 1.0;
      if (!safe) continue;
      ++done;

      // Pack unknowns (p_i, p_j, s_i.., s_j..) and compare every gradient.
      auto eval = [&](const Eigen::VectorXd& x) {
        std::array<double, 3> a = si, b = sj;
        double sum_a = 0.0, sum_b = 0.0;
        for (int mm = 0; mm < nr; ++mm) {
          a[mm] = x[2 + mm];
          b[mm] = x[2 + nr + mm];
          sum_a += a[mm];
          sum_b += b[mm];
        }
        a[np - 1] = 1.0 - sum_a;
        b[np - 1] = 1.0 - sum_b;
        const auto ctx = context(m, trans, dz, x[0], x[1], a, b);
        Eigen::VectorXd out(1 + 2 * np);
        out[0] = total_velocity(ctx).v;
        const auto ppu = phase_flux_ppu(ctx);
        const auto hu = phase_flux_hu(ctx, FaceDual(ut));
        for (int l = 0; l < np; ++l) {
          out[1 + l] = ppu.F[l].v;
          out[1 + np + l] = hu.F[l].v;
        }
        return out;
      };

      Eigen::VectorXd x(2 + 2 * nr);
      x[0] = pi;
      x[1] = pj;
      for (int mm = 0; mm < nr; ++mm) {
        x[2 + mm] = si[mm];
        x[2 + nr + mm] = sj[mm];
      }
      Eigen::VectorXd h(x.size());
      h[0] = h[1] = 1.0;
      for (int k = 2; k < x.size(); ++k) h[k] = 1e-6;

      const auto ctx = context(m, trans, dz, pi, pj, si, sj);
      const auto ppu = phase_flux_ppu(ctx);
      const auto hu = phase_flux_hu(ctx, FaceDual(ut));
      const auto utd = total_velocity(ctx);

      auto grad_of = [&](const FaceDual& d) {
        Eigen::VectorXd g(2 + 2 * nr);
        g[0] = d.d[kSlotP0];
        g[1] = d.d[kSlotP1];
        for (int mm = 0; mm < nr; ++mm) {
          g[2 + mm] = d.d[slot_s(0, mm)];
          g[2 + nr + mm] = d.d[slot_s(1, mm)];
        }
        return g;
      };

      for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] += h[k];
        xm[k] -= h[k];
        const Eigen::VectorXd fp = eval(xp);
        const Eigen::VectorXd fm = eval(xm);
        const Eigen::VectorXd fd = (fp - fm) / (2.0 * h[k]);
        Eigen::VectorXd analytic(1 + 2 * np);
        analytic[0] = grad_of(utd)[k];
        for (int l = 0; l < np; ++l) {
          analytic[1 + l] = grad_of(ppu.F[l])[k];
          analytic[1 + np + l] = grad_of(hu.F[l])[k];
        }
        for (Eigen::Index r = 0; r < analytic.size(); ++r) {
          const double scale = std::max(std::abs(fd[r]), std::abs(analytic[r]));
          EXPECT_NEAR(analytic[r], fd[r], 2e-5 * scale + 1e-12)
              << "row " << r << " unknown " << k << " np " << np;
        }
      }
    }
  }
}

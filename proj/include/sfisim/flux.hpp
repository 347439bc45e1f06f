#pragma once

#include <array>
#include <cmath>

#include "sfisim/grid.hpp"
#include "sfisim/rock_fluid.hpp"
#include "sfisim/units.hpp"

namespace sfisim {

// Face-local quantities carry a fixed six-slot gradient:
//   slot 0,1            -> p of cell i, cell j
//   slot 2+m, 4+m       -> reduced saturation m of cell i, cell j
// Upwind selectors are decided on values and frozen, so the gradients are the
// one-sided derivatives at switching points.
inline constexpr int kFaceSlots = 6;
inline constexpr int kSlotP0 = 0;
inline constexpr int kSlotP1 = 1;
inline constexpr int slot_s(int side, int m) { return 2 + 2 * side + m; }

struct FaceDual {
  double v = 0.0;
  std::array<double, kFaceSlots> d{};

  FaceDual() = default;
  explicit FaceDual(double value) : v(value) {}
};

inline FaceDual operator+(const FaceDual& a, const FaceDual& b) {
  FaceDual r;
  r.v = a.v + b.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = a.d[k] + b.d[k];
  return r;
}
inline FaceDual operator-(const FaceDual& a, const FaceDual& b) {
  FaceDual r;
  r.v = a.v - b.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = a.d[k] - b.d[k];
  return r;
}
inline FaceDual operator-(const FaceDual& a) {
  FaceDual r;
  r.v = -a.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = -a.d[k];
  return r;
}
inline FaceDual operator*(const FaceDual& a, const FaceDual& b) {
  FaceDual r;
  r.v = a.v * b.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
  return r;
}
inline FaceDual operator/(const FaceDual& a, const FaceDual& b) {
  FaceDual r;
  r.v = a.v / b.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) / b.v;
  return r;
}
inline FaceDual operator*(double c, const FaceDual& a) {
  FaceDual r;
  r.v = c * a.v;
  for (int k = 0; k < kFaceSlots; ++k) r.d[k] = c * a.d[k];
  return r;
}
inline FaceDual operator*(const FaceDual& a, double c) { return c * a; }
inline FaceDual& operator+=(FaceDual& a, const FaceDual& b) {
  a = a + b;
  return a;
}
inline FaceDual& operator-=(FaceDual& a, const FaceDual& b) {
  a = a - b;
  return a;
}

struct FaceSideProps {
  FaceDual p;
  std::array<FaceDual, kMaxPhases> lambda;
  std::array<FaceDual, kMaxPhases> b;
  std::array<FaceDual, kMaxPhases> rho;
};

/// Everything a flux kernel needs about one face: transmissibility, the
/// height difference dz = z_j - z_i, and per-side phase properties.
struct FaceContext {
  double trans = 0.0;
  double dz = 0.0;
  int np = 2;
  std::array<FaceSideProps, 2> side;

  /// Gravity weight g_l = rho_face * g * dz with arithmetic face density.
  FaceDual grav_weight(int l) const {
    return 0.5 * (side[0].rho[l] + side[1].rho[l]) *
           (units::gravity * dz);
  }
  /// Potential drop from i to j.
  FaceDual pot_diff(int l) const {
    return side[0].p - side[1].p - grav_weight(l);
  }
};

struct SeedFlags {
  bool pressure = true;
  bool saturation = true;
};

/// Evaluates per-side properties at the given states. `sat_mob` supplies the
/// saturations used for mobilities (the outer iterate during a pressure
/// solve), which may differ from the transported saturations.
inline FaceContext make_face_context(const RockFluidModel& model,
                                     const Face& face, double p_i, double p_j,
                                     const std::array<double, kMaxPhases>& s_i,
                                     const std::array<double, kMaxPhases>& s_j,
                                     SeedFlags seed = {}) {
  FaceContext ctx;
  ctx.trans = face.trans;
  ctx.dz = face.dz;
  ctx.np = model.num_phases();
  const double p_side[2] = {p_i, p_j};
  const std::array<double, kMaxPhases>* s_side[2] = {&s_i, &s_j};
  for (int c = 0; c < 2; ++c) {
    auto& sp = ctx.side[c];
    sp.p = FaceDual(p_side[c]);
    if (seed.pressure) sp.p.d[c] = 1.0;
    const RelPerm mob = mobility(model, *s_side[c]);
    for (int l = 0; l < ctx.np; ++l) {
      const ValueDeriv bv = b_of_p(model.phases[l], p_side[c], model.p_ref);
      sp.b[l] = FaceDual(bv.value);
      if (seed.pressure) sp.b[l].d[c] = bv.deriv;
      sp.rho[l] = model.phases[l].surface_density * sp.b[l];
      sp.lambda[l] = FaceDual(mob.kr[l]);
      if (seed.saturation)
        for (int m = 0; m < ctx.np - 1; ++m)
          sp.lambda[l].d[slot_s(c, m)] =
              mob.dkr[l][m] - mob.dkr[l][ctx.np - 1];
    }
  }
  return ctx;
}

struct PhaseFluxes {
  std::array<FaceDual, kMaxPhases> F;   // reservoir-volume rate [m^3/s]
  std::array<FaceDual, kMaxPhases> bF;  // surface-volume rate, upstream b
  std::array<int, kMaxPhases> upwind{};
  bool stagnant = false;
};

/// Phase-potential upwinding: mobility (and the b factor) of phase l come
/// from the side with the higher phase potential.
inline PhaseFluxes phase_flux_ppu(const FaceContext& ctx) {
  PhaseFluxes out;
  for (int l = 0; l < ctx.np; ++l) {
    const FaceDual dphi = ctx.pot_diff(l);
    const int up = dphi.v > 0.0 ? 0 : (dphi.v < 0.0 ? 1 : 0);
    out.upwind[l] = up;
    out.F[l] = ctx.trans * ctx.side[up].lambda[l] * dphi;
    out.bF[l] = ctx.side[up].b[l] * out.F[l];
  }
  return out;
}

/// Total velocity, Darcy sum over phases with PPU mobilities.
inline FaceDual total_velocity(const FaceContext& ctx) {
  FaceDual u;
  for (int l = 0; l < ctx.np; ++l) {
    const FaceDual dphi = ctx.pot_diff(l);
    const int up = dphi.v > 0.0 ? 0 : (dphi.v < 0.0 ? 1 : 0);
    u += ctx.trans * ctx.side[up].lambda[l] * dphi;
  }
  return u;
}

/// Hybrid-upwind phase fluxes for a prescribed total velocity.
///
/// Viscous part: fractional flow of u_T with every mobility taken co-current
/// from the cell upwind of sign(u_T). Buoyancy part: for each phase pair the
/// denser phase's mobility comes from the upper cell and the lighter one's
/// from the lower cell, a fixed selection that keeps the flux smooth. The
/// phase fluxes sum to u_T by construction.
inline PhaseFluxes phase_flux_hu(const FaceContext& ctx, const FaceDual& u_t) {
  PhaseFluxes out;
  const int vs = u_t.v > 0.0 ? 0 : (u_t.v < 0.0 ? 1 : 0);
  FaceDual lam_total;
  for (int l = 0; l < ctx.np; ++l) lam_total += ctx.side[vs].lambda[l];
  if (lam_total.v <= 0.0) {
    out.stagnant = true;
    return out;
  }
  for (int l = 0; l < ctx.np; ++l) {
    out.upwind[l] = vs;
    out.F[l] = (ctx.side[vs].lambda[l] / lam_total) * u_t;
    out.bF[l] = ctx.side[vs].b[l] * out.F[l];
  }
  if (ctx.dz == 0.0) return out;

  const int upper = ctx.dz > 0.0 ? 1 : 0;  // larger z is up
  const int lower = 1 - upper;
  for (int l = 0; l < ctx.np; ++l) {
    for (int m = l + 1; m < ctx.np; ++m) {
      const double rho_l = 0.5 * (ctx.side[0].rho[l].v + ctx.side[1].rho[l].v);
      const double rho_m = 0.5 * (ctx.side[0].rho[m].v + ctx.side[1].rho[m].v);
      int side_l = 0, side_m = 0;  // equal densities: term vanishes, keep i
      if (rho_l > rho_m) {
        side_l = upper;
        side_m = lower;
      } else if (rho_m > rho_l) {
        side_m = upper;
        side_l = lower;
      }
      const FaceDual lam_l = ctx.side[side_l].lambda[l];
      const FaceDual lam_m = ctx.side[side_m].lambda[m];
      const FaceDual den = lam_l + lam_m;
      if (den.v <= 0.0) continue;
      const FaceDual gdiff = ctx.grav_weight(m) - ctx.grav_weight(l);
      const FaceDual term = ctx.trans * (lam_l * lam_m / den) * gdiff;
      out.F[l] += term;
      out.F[m] -= term;
      out.bF[l] += ctx.side[side_l].b[l] * term;
      out.bF[m] -= ctx.side[side_m].b[m] * term;
    }
  }
  return out;
}

}  // namespace sfisim

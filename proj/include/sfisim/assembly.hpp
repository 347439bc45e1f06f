#pragma once

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "sfisim/flux.hpp"
#include "sfisim/grid.hpp"
#include "sfisim/rock_fluid.hpp"
#include "sfisim/state.hpp"
#include "sfisim/wells.hpp"

namespace sfisim {

/// Grid, rock/fluid model and active wells of one simulation.
struct DiscreteProblem {
  const StructuredGrid* grid = nullptr;
  const RockFluidModel* fluid = nullptr;
  std::vector<Well> wells;
};

/// Residual, sparse Jacobian and per-row normalization scale.
struct ResidualSystem {
  Eigen::VectorXd residual;
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd scale;
  int stagnant_faces = 0;
};

/// Normalized infinity norm: max |r_row| / (phi_ref * b_ref) — a
/// pore-volume-fraction imbalance.
inline double normalized_residual_norm(const ResidualSystem& rs) {
  double nrm = 0.0;
  for (Eigen::Index i = 0; i < rs.residual.size(); ++i)
    nrm = std::max(nrm, std::abs(rs.residual[i]) / rs.scale[i]);
  return nrm;
}

namespace detail {

struct Scatter {
  std::vector<Eigen::Triplet<double>>* triplets;
  Eigen::VectorXd* residual;

  /// Adds coef * dual to one row; gradient slots map to global columns
  /// (negative column = inactive slot).
  void add(int row, const FaceDual& dual, double coef,
           const std::array<int, kFaceSlots>& cols) const {
    (*residual)[row] += coef * dual.v;
    for (int k = 0; k < kFaceSlots; ++k)
      if (cols[k] >= 0 && dual.d[k] != 0.0)
        triplets->emplace_back(row, cols[k], coef * dual.d[k]);
  }
};

/// phi^{n+1} - phi^n * sum_l (b_l^n / b_l^{n+1}) s_l^n, the pressure-equation
/// accumulation with current saturations eliminated. Gradient in slot 0.
inline FaceDual pressure_accumulation(const RockFluidModel& model, double p,
                                      double p_old,
                                      const std::array<double, kMaxPhases>& s_old,
                                      double poro_old, int cell) {
  const ValueDeriv phi = porosity(model, p, cell);
  FaceDual acc(phi.value);
  acc.d[kSlotP0] = phi.deriv;
  for (int l = 0; l < model.num_phases(); ++l) {
    const double b_old = b_of_p(model.phases[l], p_old, model.p_ref).value;
    const ValueDeriv b = b_of_p(model.phases[l], p, model.p_ref);
    FaceDual bd(b.value);
    bd.d[kSlotP0] = b.deriv;
    acc -= (poro_old * b_old * s_old[l]) * (FaceDual(1.0) / bd);
  }
  return acc;
}

/// Producer reservoir-volume rate of one phase, WI * lambda_l * (p - bhp),
/// with gradients in the cell's own slots.
inline FaceDual producer_phase_rate(const Well& w, const FaceDual& p,
                                    const FaceDual& lambda) {
  return w.well_index * lambda * (p - FaceDual(w.bhp));
}

/// Cell-local properties as duals (slot 0 for p, slots 2+m for saturations).
struct CellDuals {
  FaceDual p;
  std::array<FaceDual, kMaxPhases> s;
  std::array<FaceDual, kMaxPhases> b;
  std::array<FaceDual, kMaxPhases> lambda;
  FaceDual phi;
};

inline CellDuals make_cell_duals(const RockFluidModel& model, int cell,
                                 double p, const std::array<double, kMaxPhases>& s,
                                 SeedFlags seed) {
  CellDuals cd;
  const int np = model.num_phases();
  cd.p = FaceDual(p);
  if (seed.pressure) cd.p.d[kSlotP0] = 1.0;
  const ValueDeriv phi = porosity(model, p, cell);
  cd.phi = FaceDual(phi.value);
  if (seed.pressure) cd.phi.d[kSlotP0] = phi.deriv;
  const RelPerm mob = mobility(model, s);
  for (int l = 0; l < np; ++l) {
    const ValueDeriv b = b_of_p(model.phases[l], p, model.p_ref);
    cd.b[l] = FaceDual(b.value);
    if (seed.pressure) cd.b[l].d[kSlotP0] = b.deriv;
    cd.s[l] = FaceDual(s[l]);
    if (seed.saturation) {
      if (l < np - 1) {
        cd.s[l].d[slot_s(0, l)] = 1.0;
      } else {
        for (int m = 0; m < np - 1; ++m) cd.s[l].d[slot_s(0, m)] = -1.0;
      }
    }
    cd.lambda[l] = FaceDual(mob.kr[l]);
    if (seed.saturation)
      for (int m = 0; m < np - 1; ++m)
        cd.lambda[l].d[slot_s(0, m)] = mob.dkr[l][m] - mob.dkr[l][np - 1];
  }
  return cd;
}

}  // namespace detail

/// Pressure equation (weighted sum of phase conservation laws): per cell,
///   acc(p) + (dt/V) * sum_faces sum_l (b_l,up / b_l,cell) F_l^PPU + wells.
/// Mobilities are frozen at `s_frozen`; b, rho, porosity and the PPU
/// selectors follow the trial pressure. Jacobian is d r / d p only.
inline ResidualSystem assemble_pressure(const DiscreteProblem& prob,
                                        const Eigen::VectorXd& p_trial,
                                        const SimState& state_old,
                                        const Eigen::MatrixXd& s_frozen,
                                        double dt) {
  const StructuredGrid& g = *prob.grid;
  const RockFluidModel& model = *prob.fluid;
  const int n = g.num_cells();
  const int np = model.num_phases();
  const double dt_v = dt / g.cell_volume;

  ResidualSystem sys;
  sys.residual = Eigen::VectorXd::Zero(n);
  sys.scale.resize(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  detail::Scatter sc{&trips, &sys.residual};

  auto sat_row = [&](const Eigen::MatrixXd& s, int c) {
    std::array<double, kMaxPhases> out{};
    for (int l = 0; l < np; ++l) out[l] = s(c, l);
    return out;
  };

  for (int c = 0; c < n; ++c) {
    sys.scale[c] = model.poro_ref[c];
    const FaceDual acc = detail::pressure_accumulation(
        model, p_trial[c], state_old.p[c], state_old.sat_row(c),
        porosity(model, state_old.p[c], c).value, c);
    sc.add(c, acc, 1.0, {c, -1, -1, -1, -1, -1});
  }

  const SeedFlags seed{true, false};
  for (const Face& f : g.faces) {
    const FaceContext ctx =
        make_face_context(model, f, p_trial[f.i], p_trial[f.j],
                          sat_row(s_frozen, f.i), sat_row(s_frozen, f.j), seed);
    const PhaseFluxes ppu = phase_flux_ppu(ctx);
    const std::array<int, kFaceSlots> cols = {f.i, f.j, -1, -1, -1, -1};
    for (int l = 0; l < np; ++l) {
      // (b_up / b_cell) * F_l, with the cell's own b in the denominator.
      sc.add(f.i, ppu.bF[l] / ctx.side[0].b[l], dt_v, cols);
      sc.add(f.j, ppu.bF[l] / ctx.side[1].b[l], -dt_v, cols);
    }
  }

  for (const Well& w : prob.wells) {
    const std::array<int, kFaceSlots> cols = {w.cell, -1, -1, -1, -1, -1};
    if (w.type == Well::Type::RateInjector) {
      sys.residual[w.cell] -= dt_v * w.rate;  // b_l / b_l cancels exactly
    } else {
      const detail::CellDuals cd = detail::make_cell_duals(
          model, w.cell, p_trial[w.cell], sat_row(s_frozen, w.cell), seed);
      for (int l = 0; l < np; ++l) {
        const FaceDual q = detail::producer_phase_rate(w, cd.p, cd.lambda[l]);
        sc.add(w.cell, q, dt_v, cols);
      }
    }
  }

  sys.jacobian.resize(n, n);
  sys.jacobian.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

/// Total velocity per face as the sum of PPU phase fluxes at (p, s).
inline Eigen::VectorXd compute_total_velocity(const DiscreteProblem& prob,
                                              const Eigen::VectorXd& p,
                                              const Eigen::MatrixXd& s) {
  const StructuredGrid& g = *prob.grid;
  const RockFluidModel& model = *prob.fluid;
  const int np = model.num_phases();
  Eigen::VectorXd ut(g.faces.size());
  auto sat_row = [&](int c) {
    std::array<double, kMaxPhases> out{};
    for (int l = 0; l < np; ++l) out[l] = s(c, l);
    return out;
  };
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    const FaceContext ctx = make_face_context(
        model, f, p[f.i], p[f.j], sat_row(f.i), sat_row(f.j), {false, false});
    const PhaseFluxes ppu = phase_flux_ppu(ctx);
    double sum = 0.0;
    for (int l = 0; l < np; ++l) sum += ppu.F[l].v;
    ut[static_cast<Eigen::Index>(fi)] = sum;
  }
  return ut;
}

/// Transport equations for the first n_p - 1 phases with hybrid-upwind fluxes
/// at a frozen total velocity and fixed pressure:
///   (phi b_l s_l)^{n+1} - (phi b_l s_l)^n + (dt/V) sum_faces b_l,ij F_l^HU
///   + wells.
/// Unknowns are packed saturations; Jacobian is d r / d s only.
inline ResidualSystem assemble_transport(const DiscreteProblem& prob,
                                         const Eigen::VectorXd& x,
                                         const SimState& state_old,
                                         const Eigen::VectorXd& p_fixed,
                                         const Eigen::VectorXd& ut_fixed,
                                         double dt) {
  const StructuredGrid& g = *prob.grid;
  const RockFluidModel& model = *prob.fluid;
  const int n = g.num_cells();
  const int np = model.num_phases();
  const int nr = np - 1;
  const double dt_v = dt / g.cell_volume;
  const Eigen::MatrixXd s = unpack_transport(x, np);

  ResidualSystem sys;
  sys.residual = Eigen::VectorXd::Zero(n * nr);
  sys.scale.resize(n * nr);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * nr * 8);
  detail::Scatter sc{&trips, &sys.residual};

  auto row_of = [&](int c, int l) { return c * nr + l; };
  auto sat_row = [&](int c) {
    std::array<double, kMaxPhases> out{};
    for (int l = 0; l < np; ++l) out[l] = s(c, l);
    return out;
  };

  const SeedFlags seed{false, true};
  for (int c = 0; c < n; ++c) {
    const detail::CellDuals cd =
        detail::make_cell_duals(model, c, p_fixed[c], sat_row(c), seed);
    const double phi_old = porosity(model, state_old.p[c], c).value;
    std::array<int, kFaceSlots> cols = {-1, -1, -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) cols[slot_s(0, m)] = row_of(c, m);
    for (int l = 0; l < nr; ++l) {
      sys.scale[row_of(c, l)] = model.poro_ref[c] * model.phases[l].b_ref;
      const double b_old =
          b_of_p(model.phases[l], state_old.p[c], model.p_ref).value;
      const FaceDual acc = cd.phi * cd.b[l] * cd.s[l] -
                           FaceDual(phi_old * b_old * state_old.s(c, l));
      sc.add(row_of(c, l), acc, 1.0, cols);
    }
  }

  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    const FaceContext ctx = make_face_context(
        model, f, p_fixed[f.i], p_fixed[f.j], sat_row(f.i), sat_row(f.j), seed);
    const PhaseFluxes hu =
        phase_flux_hu(ctx, FaceDual(ut_fixed[static_cast<Eigen::Index>(fi)]));
    if (hu.stagnant) ++sys.stagnant_faces;
    std::array<int, kFaceSlots> cols = {-1, -1, -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) {
      cols[slot_s(0, m)] = row_of(f.i, m);
      cols[slot_s(1, m)] = row_of(f.j, m);
    }
    for (int l = 0; l < nr; ++l) {
      sc.add(row_of(f.i, l), hu.bF[l], dt_v, cols);
      sc.add(row_of(f.j, l), hu.bF[l], -dt_v, cols);
    }
  }

  for (const Well& w : prob.wells) {
    const detail::CellDuals cd = detail::make_cell_duals(
        model, w.cell, p_fixed[w.cell], sat_row(w.cell), seed);
    std::array<int, kFaceSlots> cols = {-1, -1, -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) cols[slot_s(0, m)] = row_of(w.cell, m);
    if (w.type == Well::Type::RateInjector) {
      if (w.phase < nr)
        sys.residual[row_of(w.cell, w.phase)] -=
            dt_v * cd.b[w.phase].v * w.rate;
    } else {
      for (int l = 0; l < nr; ++l) {
        const FaceDual q = detail::producer_phase_rate(w, cd.p, cd.lambda[l]);
        sc.add(row_of(w.cell, l), cd.b[l] * q, dt_v, cols);
      }
    }
  }

  sys.jacobian.resize(n * nr, n * nr);
  sys.jacobian.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

/// Monolithic system: pressure rows of the SFI fixed point (PPU fluxes, live
/// saturations) stacked with transport rows (HU fluxes whose u_T is the live
/// PPU total velocity). Unknowns per cell: [p, s_1..s_{n_p-1}].
inline ResidualSystem assemble_fi(const DiscreteProblem& prob,
                                  const SimState& trial,
                                  const SimState& state_old, double dt) {
  const StructuredGrid& g = *prob.grid;
  const RockFluidModel& model = *prob.fluid;
  const int n = g.num_cells();
  const int np = model.num_phases();
  const int nr = np - 1;
  const int blk = nr + 1;
  const double dt_v = dt / g.cell_volume;

  ResidualSystem sys;
  sys.residual = Eigen::VectorXd::Zero(n * blk);
  sys.scale.resize(n * blk);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * blk * 12);
  detail::Scatter sc{&trips, &sys.residual};

  auto p_row = [&](int c) { return c * blk; };
  auto t_row = [&](int c, int l) { return c * blk + 1 + l; };

  const SeedFlags seed{true, true};
  for (int c = 0; c < n; ++c) {
    sys.scale[p_row(c)] = model.poro_ref[c];
    for (int l = 0; l < nr; ++l)
      sys.scale[t_row(c, l)] = model.poro_ref[c] * model.phases[l].b_ref;

    std::array<int, kFaceSlots> cols = {p_row(c), -1, -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) cols[slot_s(0, m)] = t_row(c, m) ;
    const FaceDual acc_p = detail::pressure_accumulation(
        model, trial.p[c], state_old.p[c], state_old.sat_row(c),
        porosity(model, state_old.p[c], c).value, c);
    sc.add(p_row(c), acc_p, 1.0, cols);

    const detail::CellDuals cd =
        detail::make_cell_duals(model, c, trial.p[c], trial.sat_row(c), seed);
    const double phi_old = porosity(model, state_old.p[c], c).value;
    for (int l = 0; l < nr; ++l) {
      const double b_old =
          b_of_p(model.phases[l], state_old.p[c], model.p_ref).value;
      const FaceDual acc = cd.phi * cd.b[l] * cd.s[l] -
                           FaceDual(phi_old * b_old * state_old.s(c, l));
      sc.add(t_row(c, l), acc, 1.0, cols);
    }
  }

  for (const Face& f : g.faces) {
    const FaceContext ctx =
        make_face_context(model, f, trial.p[f.i], trial.p[f.j],
                          trial.sat_row(f.i), trial.sat_row(f.j), seed);
    const PhaseFluxes ppu = phase_flux_ppu(ctx);
    FaceDual ut;
    for (int l = 0; l < np; ++l) ut += ppu.F[l];
    const PhaseFluxes hu = phase_flux_hu(ctx, ut);
    if (hu.stagnant) ++sys.stagnant_faces;

    std::array<int, kFaceSlots> cols = {p_row(f.i), p_row(f.j), -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) {
      cols[slot_s(0, m)] = t_row(f.i, m);
      cols[slot_s(1, m)] = t_row(f.j, m);
    }
    for (int l = 0; l < np; ++l) {
      sc.add(p_row(f.i), ppu.bF[l] / ctx.side[0].b[l], dt_v, cols);
      sc.add(p_row(f.j), ppu.bF[l] / ctx.side[1].b[l], -dt_v, cols);
    }
    for (int l = 0; l < nr; ++l) {
      sc.add(t_row(f.i, l), hu.bF[l], dt_v, cols);
      sc.add(t_row(f.j, l), hu.bF[l], -dt_v, cols);
    }
  }

  for (const Well& w : prob.wells) {
    std::array<int, kFaceSlots> cols = {p_row(w.cell), -1, -1, -1, -1, -1};
    for (int m = 0; m < nr; ++m) cols[slot_s(0, m)] = t_row(w.cell, m);
    if (w.type == Well::Type::RateInjector) {
      sys.residual[p_row(w.cell)] -= dt_v * w.rate;
      const detail::CellDuals cd = detail::make_cell_duals(
          model, w.cell, trial.p[w.cell], trial.sat_row(w.cell), seed);
      if (w.phase < nr)
        sc.add(t_row(w.cell, w.phase), cd.b[w.phase], -dt_v * w.rate, cols);
    } else {
      const detail::CellDuals cd = detail::make_cell_duals(
          model, w.cell, trial.p[w.cell], trial.sat_row(w.cell), seed);
      for (int l = 0; l < np; ++l) {
        const FaceDual q = detail::producer_phase_rate(w, cd.p, cd.lambda[l]);
        sc.add(p_row(w.cell), q, dt_v, cols);
        if (l < nr) sc.add(t_row(w.cell, l), cd.b[l] * q, dt_v, cols);
      }
    }
  }

  sys.jacobian.resize(n * blk, n * blk);
  sys.jacobian.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

/// Total surface volume of each phase, sum_i V_i phi_i b_l s_l.
inline std::array<double, kMaxPhases> phase_inventory(
    const DiscreteProblem& prob, const SimState& state) {
  const RockFluidModel& model = *prob.fluid;
  std::array<double, kMaxPhases> mass{};
  for (int c = 0; c < prob.grid->num_cells(); ++c) {
    const double phi = porosity(model, state.p[c], c).value;
    for (int l = 0; l < model.num_phases(); ++l)
      mass[l] += prob.grid->cell_volume * phi *
                 b_of_p(model.phases[l], state.p[c], model.p_ref).value *
                 state.s(c, l);
  }
  return mass;
}

/// Net surface-volume well rates per phase at the given state (injection
/// positive, production negative), matching the assembled source terms.
inline std::array<double, kMaxPhases> well_surface_rates(
    const DiscreteProblem& prob, const SimState& state) {
  const RockFluidModel& model = *prob.fluid;
  std::array<double, kMaxPhases> q{};
  for (const Well& w : prob.wells) {
    if (w.type == Well::Type::RateInjector) {
      q[w.phase] +=
          b_of_p(model.phases[w.phase], state.p[w.cell], model.p_ref).value *
          w.rate;
    } else {
      const RelPerm mob = mobility(model, state.sat_row(w.cell));
      for (int l = 0; l < model.num_phases(); ++l)
        q[l] -= b_of_p(model.phases[l], state.p[w.cell], model.p_ref).value *
                w.well_index * mob.kr[l] * (state.p[w.cell] - w.bhp);
    }
  }
  return q;
}

}  // namespace sfisim

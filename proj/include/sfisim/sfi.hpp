#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfisim/anderson.hpp"
#include "sfisim/assembly.hpp"
#include "sfisim/newton.hpp"

namespace sfisim {

/// Outer-loop controls. Pressure increments are tested relative to p_scale so
/// the single outer tolerance applies to both pressure and saturations.
struct OuterConfig {
  double eps_p_out = 1e-3;
  double eps_t_out = 1e-3;
  int max_outer = 30;
  double eps_final = 1e-5;  // residual verification before accepting a step
  double p_scale = 1.0;     // [Pa], normally the initial reservoir pressure
  int max_inner_pressure = 20;
  int max_inner_transport = 20;
  double sat_chop = 0.2;
};

/// One outer pass: inner iteration counts and the initial/final normalized
/// residuals of both solvers.
struct OuterPassRecord {
  int pressure_iters = 0;
  int transport_iters = 0;
  double pressure_r0 = 0.0;
  double pressure_rk = 0.0;
  double transport_r0 = 0.0;
  double transport_rk = 0.0;
  double eps_p = 0.0;
  double eps_t = 0.0;
};

/// One attempted timestep (possibly later cut).
struct StepRecord {
  int step = 0;
  int attempt = 0;
  double t_start = 0.0;  // [s]
  double dt = 0.0;       // [s]
  bool converged = false;
  std::string failure;
  std::vector<OuterPassRecord> passes;
  std::array<double, kMaxPhases> mass_error{};  // accepted steps only

  int outer() const { return static_cast<int>(passes.size()); }
  int pressure_inner() const {
    int k = 0;
    for (const auto& p : passes) k += p.pressure_iters;
    return k;
  }
  int transport_inner() const {
    int k = 0;
    for (const auto& p : passes) k += p.transport_iters;
    return k;
  }
};

/// Accumulated counters for a whole run, wasted = spent in cut attempts.
struct IterationReport {
  std::vector<StepRecord> attempts;

  int accepted_steps() const {
    int k = 0;
    for (const auto& a : attempts) k += a.converged ? 1 : 0;
    return k;
  }
  int total_outer() const {
    int k = 0;
    for (const auto& a : attempts) k += a.outer();
    return k;
  }
  int total_pressure_inner() const {
    int k = 0;
    for (const auto& a : attempts) k += a.pressure_inner();
    return k;
  }
  int total_transport_inner() const {
    int k = 0;
    for (const auto& a : attempts) k += a.transport_inner();
    return k;
  }
  int wasted_outer() const {
    int k = 0;
    for (const auto& a : attempts) k += a.converged ? 0 : a.outer();
    return k;
  }
  int wasted_pressure_inner() const {
    int k = 0;
    for (const auto& a : attempts) k += a.converged ? 0 : a.pressure_inner();
    return k;
  }
  int wasted_transport_inner() const {
    int k = 0;
    for (const auto& a : attempts) k += a.converged ? 0 : a.transport_inner();
    return k;
  }
};

struct StepOutcome {
  bool ok = false;
  SimState state;
  StepRecord record;
};

/// One SFI timestep (outer coupling loop).
///
/// Every pass solves pressure implicitly with mobilities frozen at the outer
/// saturation iterate, recomputes the total flux from the converged PPU phase
/// fluxes, solves transport implicitly against that frozen flux, and (when
/// enabled) accelerates the saturation sequence. The step is accepted when
/// both increments are below the outer tolerances and the recomputed coupled
/// residuals pass the eps_final check.
inline StepOutcome sfi_step(const DiscreteProblem& prob,
                            const SimState& state_n, double dt,
                            const TolerancePolicy& policy, const QnConfig& qn,
                            const OuterConfig& outer) {
  const RockFluidModel& model = *prob.fluid;
  const int np = model.num_phases();
  const int nr = np - 1;

  StepOutcome out;
  out.record.dt = dt;

  Eigen::VectorXd p = state_n.p;
  Eigen::MatrixXd s = state_n.s;
  QnWorkspace ws(state_n.num_cells() * nr);
  std::optional<double> prev_r0_p, prev_r0_t;

  // Armed when an increment-converged iterate fails the residual
  // verification: the policy tolerance alone cannot reach eps_final (the
  // inner solvers skip once their entry residual meets it), so later passes
  // cap the effective tolerances until the verification passes.
  bool polish = false;
  auto capped = [&](double eps, double floor) {
    return polish ? std::min(eps, std::max(0.3 * outer.eps_final, floor)) : eps;
  };

  auto fail = [&](const std::string& why) {
    out.ok = false;
    out.record.failure = why;
    return out;
  };

  for (int nu = 0; nu < outer.max_outer; ++nu) {
    OuterPassRecord pass;

    // Pressure solve at frozen mobilities.
    PressureProblem pp{&prob, &state_n, &s, dt};
    const double r0_p = normalized_residual_norm(pp.assemble(p));
    pass.eps_p = capped(effective_tolerance(policy, InnerSolver::Pressure,
                                            r0_p, prev_r0_p, nu),
                        policy.eps_floor_p);
    InnerResult rp = newton_solve(pp, p, pass.eps_p, outer.max_inner_pressure);
    pass.pressure_iters = rp.iterations;
    pass.pressure_r0 = rp.initial_residual();
    pass.pressure_rk = rp.final_residual();
    if (rp.linear_failure) {
      out.record.passes.push_back(pass);
      return fail("pressure solver breakdown");
    }
    if (!rp.converged) {
      out.record.passes.push_back(pass);
      return fail("pressure solver exceeded max iterations");
    }
    const Eigen::VectorXd p_new = rp.x;

    // Total flux from the converged PPU phase fluxes.
    const Eigen::VectorXd ut = compute_total_velocity(prob, p_new, s);

    // Transport solve against the frozen total flux.
    TransportProblem tp{&prob, &state_n, &p_new, &ut, dt, outer.sat_chop};
    const Eigen::VectorXd x_nu = pack_transport(s);
    const double r0_t = normalized_residual_norm(tp.assemble(x_nu));
    pass.eps_t = capped(effective_tolerance(policy, InnerSolver::Transport,
                                            r0_t, prev_r0_t, nu),
                        policy.eps_floor_t);
    InnerResult rt = newton_solve(tp, x_nu, pass.eps_t,
                                  outer.max_inner_transport);
    pass.transport_iters = rt.iterations;
    pass.transport_r0 = rt.initial_residual();
    pass.transport_rk = rt.final_residual();
    out.record.passes.push_back(pass);
    if (rt.linear_failure) return fail("transport solver breakdown");
    if (!rt.converged) return fail("transport solver exceeded max iterations");

    Eigen::VectorXd x_next =
        qn.enabled ? qn_update(ws, x_nu, rt.x, qn, nu) : rt.x;
    clamp_saturations(x_next, np);

    const double dp_norm =
        (p_new - p).lpNorm<Eigen::Infinity>() / outer.p_scale;
    const double ds_norm = (x_next - x_nu).lpNorm<Eigen::Infinity>();

    p = p_new;
    s = unpack_transport(x_next, np);
    prev_r0_p = r0_p;
    prev_r0_t = r0_t;

    if (dp_norm <= outer.eps_p_out && ds_norm <= outer.eps_t_out) {
      // Increment-only convergence can be spurious under heavy relaxation;
      // verify the coupled residuals at the accepted iterate.
      const double rp_fin = normalized_residual_norm(
          assemble_pressure(prob, p, state_n, s, dt));
      const Eigen::VectorXd ut_fin = compute_total_velocity(prob, p, s);
      const double rt_fin = normalized_residual_norm(assemble_transport(
          prob, pack_transport(s), state_n, p, ut_fin, dt));
      if (rp_fin <= outer.eps_final && rt_fin <= outer.eps_final) {
        out.ok = true;
        out.record.converged = true;
        out.state.p = std::move(p);
        out.state.s = std::move(s);
        return out;
      }
      polish = true;
    }
  }
  return fail("outer loop exceeded max iterations");
}

/// Well schedule hook: produces the active well set at a given time.
using WellsAt = std::function<std::vector<Well>(double t)>;

struct SimulationControls {
  double dt_max = 0.0;  // [s]
  double t_end = 0.0;   // [s]
  double dt_min_fraction = 1.0 / 64.0;
  std::vector<double> schedule_breaks;  // times steps must not straddle [s]
};

struct SimulationResult {
  SimState state;
  IterationReport report;
};

/// Marches sfi_step over [0, t_end] with halving on failure (wasted
/// iterations are kept in the report) and doubling after success, capped at
/// dt_max and aligned to schedule breaks.
inline SimulationResult run_simulation(const DiscreteProblem& base,
                                       const SimState& initial,
                                       const TolerancePolicy& policy,
                                       const QnConfig& qn,
                                       const OuterConfig& outer,
                                       const SimulationControls& controls,
                                       const WellsAt& wells_at = {}) {
  SimulationResult res;
  res.state = initial;
  const double dt_min = controls.dt_max * controls.dt_min_fraction;
  const double t_eps = 1e-9 * std::max(controls.t_end, controls.dt_max);

  double t = 0.0;
  double dt_next = controls.dt_max;
  int step = 0;
  while (t < controls.t_end - t_eps) {
    double dt = std::min(dt_next, controls.t_end - t);
    for (double brk : controls.schedule_breaks)
      if (brk > t + t_eps && brk < t + dt - t_eps) dt = brk - t;

    DiscreteProblem prob = base;
    if (wells_at) prob.wells = wells_at(t);

    int attempt = 0;
    while (true) {
      StepOutcome so = sfi_step(prob, res.state, dt, policy, qn, outer);
      so.record.step = step;
      so.record.attempt = attempt;
      so.record.t_start = t;
      if (so.ok) {
        const auto m0 = phase_inventory(prob, res.state);
        const auto m1 = phase_inventory(prob, so.state);
        const auto q = well_surface_rates(prob, so.state);
        for (int l = 0; l < prob.fluid->num_phases(); ++l)
          so.record.mass_error[l] = std::abs((m1[l] - m0[l]) - dt * q[l]);
        res.report.attempts.push_back(so.record);
        res.state = std::move(so.state);
        t += dt;
        dt_next = std::min(2.0 * dt, controls.dt_max);
        ++step;
        break;
      }
      res.report.attempts.push_back(so.record);
      if (dt / 2.0 < dt_min * (1.0 - 1e-12))
        throw SimulationError("time step cut below dt_max/64 at t = " +
                              std::to_string(t / 86400.0) + " days (" +
                              so.record.failure + ")");
      dt /= 2.0;
      ++attempt;
    }
  }
  return res;
}

}  // namespace sfisim

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>
#include <vector>

#include "sfisim/assembly.hpp"
#include "sfisim/state.hpp"

namespace sfisim {

enum class InnerSolver { Pressure, Transport };

/// Inner-solver termination strategy.
///
/// Tight / AbsoluteRelax use fixed absolute tolerances; RelativeRelax scales
/// the initial residual by a fixed forcing term xi; AdaptiveRelax recomputes
/// xi every outer pass from the ratio of consecutive initial residuals,
/// clamped to [xi_min, beta]. A floor keeps the effective tolerance from
/// collapsing when the initial residual is already tiny.
struct TolerancePolicy {
  enum class Strategy { Tight, AbsoluteRelax, RelativeRelax, AdaptiveRelax };
  Strategy strategy = Strategy::Tight;
  double eps_p = 1e-7;
  double eps_t = 1e-5;
  double xi_p = 0.1;
  double xi_t = 0.1;
  double beta_p = 0.5;
  double beta_t = 0.5;
  double xi_min = 0.01;
  double eps_floor_p = 1e-8;
  double eps_floor_t = 1e-7;

  static TolerancePolicy tight() { return {}; }
  static TolerancePolicy absolute_relax() {
    TolerancePolicy p;
    p.strategy = Strategy::AbsoluteRelax;
    p.eps_p = 1.0;
    p.eps_t = 0.1;
    return p;
  }
  static TolerancePolicy relative_relax() {
    TolerancePolicy p;
    p.strategy = Strategy::RelativeRelax;
    return p;
  }
  static TolerancePolicy adaptive_relax() {
    TolerancePolicy p;
    p.strategy = Strategy::AdaptiveRelax;
    return p;
  }
};

/// Effective absolute tolerance for one inner solve at outer pass nu.
inline double effective_tolerance(const TolerancePolicy& policy,
                                  InnerSolver which, double r0,
                                  std::optional<double> r0_prev_outer,
                                  int outer_index) {
  if (!(r0 >= 0.0))
    throw std::invalid_argument("effective_tolerance: R0 must be >= 0");
  const bool pressure = which == InnerSolver::Pressure;
  const double floor =
      pressure ? policy.eps_floor_p : policy.eps_floor_t;
  double eps = 0.0;
  switch (policy.strategy) {
    case TolerancePolicy::Strategy::Tight:
    case TolerancePolicy::Strategy::AbsoluteRelax:
      eps = pressure ? policy.eps_p : policy.eps_t;
      break;
    case TolerancePolicy::Strategy::RelativeRelax:
      eps = (pressure ? policy.xi_p : policy.xi_t) * r0;
      break;
    case TolerancePolicy::Strategy::AdaptiveRelax: {
      const double beta = pressure ? policy.beta_p : policy.beta_t;
      double xi = beta;
      if (outer_index > 0) {
        if (!r0_prev_outer.has_value())
          throw std::invalid_argument(
              "effective_tolerance: previous initial residual required for "
              "outer_index > 0");
        const double prev = *r0_prev_outer;
        xi = prev > 0.0 ? beta * r0 / prev : beta;
        xi = std::min(beta, std::max(policy.xi_min, xi));
      }
      eps = xi * r0;
      break;
    }
  }
  return std::max(eps, floor);
}

/// Outcome of one damped-Newton inner solve.
struct InnerResult {
  Eigen::VectorXd x;
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double tolerance = 0.0;
  bool linear_failure = false;

  double initial_residual() const { return residual_history.front(); }
  double final_residual() const { return residual_history.back(); }
};

/// Newton iteration x  <- x + safeguard(J \ -r) on a problem providing
/// `assemble(x) -> ResidualSystem` and `apply_update(x, dx) -> x_new`.
/// Terminates as soon as the normalized residual meets eps (possibly with
/// zero iterations) or when max_iter updates have been taken.
template <class Problem>
InnerResult newton_solve(const Problem& prob, Eigen::VectorXd x, double eps,
                         int max_iter) {
  InnerResult res;
  res.tolerance = eps;
  ResidualSystem sys = prob.assemble(x);
  double rnorm = normalized_residual_norm(sys);
  res.residual_history.push_back(rnorm);
  while (rnorm > eps || !std::isfinite(rnorm)) {
    if (res.iterations >= max_iter || !std::isfinite(rnorm)) {
      res.x = std::move(x);
      return res;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(sys.jacobian);
    if (lu.info() != Eigen::Success) {
      res.linear_failure = true;
      res.x = std::move(x);
      return res;
    }
    const Eigen::VectorXd dx = lu.solve(-sys.residual);
    if (!dx.allFinite()) {
      res.linear_failure = true;
      res.x = std::move(x);
      return res;
    }
    x = prob.apply_update(x, dx);
    ++res.iterations;
    sys = prob.assemble(x);
    rnorm = normalized_residual_norm(sys);
    res.residual_history.push_back(rnorm);
  }
  res.converged = true;
  res.x = std::move(x);
  return res;
}

/// Pressure sub-problem: unknowns are cell pressures, no update safeguard.
struct PressureProblem {
  const DiscreteProblem* prob;
  const SimState* state_old;
  const Eigen::MatrixXd* s_frozen;
  double dt;

  ResidualSystem assemble(const Eigen::VectorXd& p) const {
    return assemble_pressure(*prob, p, *state_old, *s_frozen, dt);
  }
  Eigen::VectorXd apply_update(const Eigen::VectorXd& p,
                               const Eigen::VectorXd& dp) const {
    return p + dp;
  }
};

/// Transport sub-problem: packed saturations, Appleyard-style per-cell chop
/// of the update followed by clamping and renormalization.
struct TransportProblem {
  const DiscreteProblem* prob;
  const SimState* state_old;
  const Eigen::VectorXd* p_fixed;
  const Eigen::VectorXd* ut_fixed;
  double dt;
  double max_change = 0.2;

  ResidualSystem assemble(const Eigen::VectorXd& x) const {
    return assemble_transport(*prob, x, *state_old, *p_fixed, *ut_fixed, dt);
  }
  Eigen::VectorXd apply_update(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& dx) const {
    const int np = prob->fluid->num_phases();
    const int nr = np - 1;
    const int n = static_cast<int>(x.size()) / nr;
    Eigen::VectorXd out = x;
    for (int c = 0; c < n; ++c) {
      double amax = 0.0;
      for (int m = 0; m < nr; ++m)
        amax = std::max(amax, std::abs(dx[c * nr + m]));
      const double damp = amax > max_change ? max_change / amax : 1.0;
      for (int m = 0; m < nr; ++m)
        out[c * nr + m] += damp * dx[c * nr + m];
    }
    clamp_saturations(out, np);
    return out;
  }
};

}  // namespace sfisim

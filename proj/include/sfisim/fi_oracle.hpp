#pragma once

#include <vector>

#include "sfisim/assembly.hpp"
#include "sfisim/newton.hpp"

namespace sfisim {

/// Monolithic solve of the coupled (p, s) system assembled by assemble_fi —
/// the same discrete operators as the sequential scheme's fixed point, so a
/// converged sequential solution must satisfy this residual. Desk-scale
/// reference only.
struct FiResult {
  SimState state;
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

namespace detail {

struct FiProblem {
  const DiscreteProblem* prob;
  const SimState* state_old;
  double dt;
  double sat_chop;

  int np() const { return prob->fluid->num_phases(); }

  Eigen::VectorXd pack(const SimState& st) const {
    const int n = st.num_cells();
    const int blk = np();
    Eigen::VectorXd x(n * blk);
    for (int c = 0; c < n; ++c) {
      x[c * blk] = st.p[c];
      for (int m = 0; m + 1 < blk; ++m) x[c * blk + 1 + m] = st.s(c, m);
    }
    return x;
  }

  SimState unpack(const Eigen::VectorXd& x) const {
    const int blk = np();
    const int n = static_cast<int>(x.size()) / blk;
    SimState st;
    st.p.resize(n);
    st.s.resize(n, blk);
    for (int c = 0; c < n; ++c) {
      st.p[c] = x[c * blk];
      double sum = 0.0;
      for (int m = 0; m + 1 < blk; ++m) {
        st.s(c, m) = x[c * blk + 1 + m];
        sum += st.s(c, m);
      }
      st.s(c, blk - 1) = 1.0 - sum;
    }
    return st;
  }

  ResidualSystem assemble(const Eigen::VectorXd& x) const {
    return assemble_fi(*prob, unpack(x), *state_old, dt);
  }

  Eigen::VectorXd apply_update(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& dx) const {
    const int blk = np();
    const int nr = blk - 1;
    const int n = static_cast<int>(x.size()) / blk;
    Eigen::VectorXd out = x;
    Eigen::VectorXd sat(n * nr);
    for (int c = 0; c < n; ++c) {
      out[c * blk] += dx[c * blk];
      double amax = 0.0;
      for (int m = 0; m < nr; ++m)
        amax = std::max(amax, std::abs(dx[c * blk + 1 + m]));
      const double damp = amax > sat_chop ? sat_chop / amax : 1.0;
      for (int m = 0; m < nr; ++m)
        sat[c * nr + m] = x[c * blk + 1 + m] + damp * dx[c * blk + 1 + m];
    }
    clamp_saturations(sat, blk);
    for (int c = 0; c < n; ++c)
      for (int m = 0; m < nr; ++m) out[c * blk + 1 + m] = sat[c * nr + m];
    return out;
  }
};

}  // namespace detail

inline FiResult fi_solve_step(const DiscreteProblem& prob,
                              const SimState& state_n, double dt,
                              double tol = 1e-10, int max_iter = 50,
                              double sat_chop = 0.2,
                              const SimState* initial_guess = nullptr) {
  detail::FiProblem fp{&prob, &state_n, dt, sat_chop};
  InnerResult r = newton_solve(
      fp, fp.pack(initial_guess ? *initial_guess : state_n), tol, max_iter);
  FiResult out;
  out.state = fp.unpack(r.x);
  out.iterations = r.iterations;
  out.residual_history = std::move(r.residual_history);
  out.converged = r.converged;
  return out;
}

}  // namespace sfisim

#pragma once

#include <Eigen/Dense>
#include <array>

#include "sfisim/errors.hpp"
#include "sfisim/rock_fluid.hpp"

namespace sfisim {

/// Per-cell pressure [Pa] and saturations (n_cells x n_phases, rows sum to 1).
struct SimState {
  Eigen::VectorXd p;
  Eigen::MatrixXd s;

  int num_cells() const { return static_cast<int>(p.size()); }
  int num_phases() const { return static_cast<int>(s.cols()); }

  std::array<double, kMaxPhases> sat_row(int cell) const {
    std::array<double, kMaxPhases> out{};
    for (int l = 0; l < num_phases(); ++l) out[l] = s(cell, l);
    return out;
  }

  bool valid(double tol = 1e-9) const {
    for (int c = 0; c < num_cells(); ++c) {
      double sum = 0.0;
      for (int l = 0; l < num_phases(); ++l) {
        const double v = s(c, l);
        if (!(v >= -tol && v <= 1.0 + tol)) return false;
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) return false;
    }
    return p.allFinite();
  }
};

/// Transport unknowns are the first n_p - 1 saturations of every cell,
/// cell-major; the last phase is eliminated through the unit-sum constraint.
inline Eigen::VectorXd pack_transport(const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows());
  const int nr = static_cast<int>(s.cols()) - 1;
  Eigen::VectorXd x(n * nr);
  for (int c = 0; c < n; ++c)
    for (int m = 0; m < nr; ++m) x[c * nr + m] = s(c, m);
  return x;
}

inline Eigen::MatrixXd unpack_transport(const Eigen::VectorXd& x, int np) {
  const int nr = np - 1;
  const int n = static_cast<int>(x.size()) / nr;
  Eigen::MatrixXd s(n, np);
  for (int c = 0; c < n; ++c) {
    double sum = 0.0;
    for (int m = 0; m < nr; ++m) {
      s(c, m) = x[c * nr + m];
      sum += s(c, m);
    }
    s(c, nr) = 1.0 - sum;
  }
  return s;
}

/// Clamps every phase saturation (including the eliminated one) to [0,1] and
/// rescales the row to unit sum. Operates in place on a packed vector.
inline void clamp_saturations(Eigen::VectorXd& x, int np) {
  const int nr = np - 1;
  const int n = static_cast<int>(x.size()) / nr;
  for (int c = 0; c < n; ++c) {
    double sum = 0.0;
    for (int m = 0; m < nr; ++m) {
      x[c * nr + m] = std::min(1.0, std::max(0.0, x[c * nr + m]));
      sum += x[c * nr + m];
    }
    const double last = std::min(1.0, std::max(0.0, 1.0 - sum));
    const double total = sum + last;  // > 0: last = 1 whenever sum = 0
    for (int m = 0; m < nr; ++m) x[c * nr + m] /= total;
  }
}

}  // namespace sfisim

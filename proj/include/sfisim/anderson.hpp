#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sfisim/errors.hpp"

namespace sfisim {

/// Quasi-Newton (Anderson-type) acceleration parameters for the outer loop.
struct QnConfig {
  bool enabled = true;
  int m = 3;             // window depth
  double omega = 0.5;    // damping
  double omega0 = 1.0;   // damping of the very first (Picard) step
  double drop_tol = 1e-12;

  void validate() const {
    if (m < 1 || m > 20) throw ConfigError("qn: window depth m must be in [1,20]");
    if (!(omega > 0.0 && omega <= 1.0) || !(omega0 > 0.0 && omega0 <= 1.0))
      throw ConfigError("qn: damping factors must lie in (0,1]");
  }
};

/// Thin QR factorization maintained under append-right / drop-left column
/// updates. Appending reorthogonalizes twice (classical Gram-Schmidt with
/// refinement); dropping re-triangularizes with a Givens sweep.
class UpdatableQR {
 public:
  explicit UpdatableQR(int rows) : rows_(rows) {}

  int cols() const { return static_cast<int>(r_.cols()); }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& r() const { return r_; }

  void append_column(const Eigen::VectorXd& v) {
    const int k = cols();
    Eigen::VectorXd w = v;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k);
    if (k > 0) {
      h = q_.transpose() * w;
      w -= q_ * h;
      const Eigen::VectorXd h2 = q_.transpose() * w;
      w -= q_ * h2;
      h += h2;
    }
    const double rho = w.norm();
    q_.conservativeResize(rows_, k + 1);
    q_.col(k) = rho > 0.0 ? Eigen::VectorXd(w / rho)
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(rows_));
    Eigen::MatrixXd rnew = Eigen::MatrixXd::Zero(k + 1, k + 1);
    rnew.topLeftCorner(k, k) = r_;
    rnew.block(0, k, k, 1) = h;
    rnew(k, k) = rho;
    r_ = std::move(rnew);
  }

  void drop_first_column() {
    const int k = cols();
    if (k == 0) return;
    Eigen::MatrixXd rh = r_.rightCols(k - 1);  // k x (k-1), upper Hessenberg
    for (int t = 0; t + 1 < k; ++t) {
      const double a = rh(t, t);
      const double b = rh(t + 1, t);
      const double norm = std::hypot(a, b);
      if (norm == 0.0) continue;
      const double c = a / norm;
      const double s = b / norm;
      for (int j = t; j < k - 1; ++j) {
        const double r0 = rh(t, j);
        const double r1 = rh(t + 1, j);
        rh(t, j) = c * r0 + s * r1;
        rh(t + 1, j) = -s * r0 + c * r1;
      }
      const Eigen::VectorXd q0 = q_.col(t);
      const Eigen::VectorXd q1 = q_.col(t + 1);
      q_.col(t) = c * q0 + s * q1;
      q_.col(t + 1) = -s * q0 + c * q1;
    }
    q_.conservativeResize(rows_, k - 1);
    r_ = rh.topRows(k - 1);
  }

  /// Index of the first diagonal entry with |R_tt| <= tol, or -1.
  int first_bad_diagonal(double tol) const {
    for (int t = 0; t < cols(); ++t)
      if (std::abs(r_(t, t)) <= tol) return t;
    return -1;
  }

  /// Least-squares solution of min ||rhs - A gamma|| through the stored
  /// factors: back-substitution of R gamma = Q^T rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const int k = cols();
    Eigen::VectorXd g = q_.transpose() * rhs;
    for (int t = k - 1; t >= 0; --t) {
      for (int j = t + 1; j < k; ++j) g[t] -= r_(t, j) * g[j];
      g[t] /= r_(t, t);
    }
    return g;
  }

 private:
  int rows_;
  Eigen::MatrixXd q_{0, 0};
  Eigen::MatrixXd r_{0, 0};
};

/// Secant history of the outer fixed-point iteration: windows of solution and
/// residual differences with the QR factors of the residual-difference block.
class QnWorkspace {
 public:
  explicit QnWorkspace(int n) : rows_(n), qr_(n) {}

  int size() const { return static_cast<int>(dr_.size()); }
  const Eigen::VectorXd& dx(int t) const { return dx_[t]; }
  const Eigen::VectorXd& dr(int t) const { return dr_[t]; }
  const UpdatableQR& qr() const { return qr_; }

  bool has_previous() const { return has_prev_; }
  const Eigen::VectorXd& previous_x() const { return prev_x_; }
  const Eigen::VectorXd& previous_r() const { return prev_r_; }

  void remember(const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
    prev_x_ = x;
    prev_r_ = r;
    has_prev_ = true;
  }

  void push_pair(const Eigen::VectorXd& dx, const Eigen::VectorXd& dr,
                 int window) {
    dx_.push_back(dx);
    dr_.push_back(dr);
    qr_.append_column(dr);
    while (size() > window) {
      dx_.erase(dx_.begin());
      dr_.erase(dr_.begin());
      qr_.drop_first_column();
    }
  }

  double history_norm() const {
    double sq = 0.0;
    for (const auto& c : dr_) sq += c.squaredNorm();
    return std::sqrt(sq);
  }

  /// Drops near-dependent columns until the triangular factor is safely
  /// invertible. Rebuilds the factors from the retained columns.
  void drop_degenerate(double drop_tol) {
    while (size() > 0) {
      const int bad = qr_.first_bad_diagonal(drop_tol * history_norm());
      if (bad < 0) return;
      dx_.erase(dx_.begin() + bad);
      dr_.erase(dr_.begin() + bad);
      UpdatableQR fresh(rows_);
      for (const auto& c : dr_) fresh.append_column(c);
      qr_ = std::move(fresh);
    }
  }

 private:
  int rows_;
  std::vector<Eigen::VectorXd> dx_;
  std::vector<Eigen::VectorXd> dr_;
  UpdatableQR qr_;
  Eigen::VectorXd prev_x_;
  Eigen::VectorXd prev_r_;
  bool has_prev_ = false;
};

/// One accelerated outer update.
///
/// With the fixed-point residual r = x_tilde - x_nu, pass 0 takes the damped
/// Picard step x + omega0 * r. Later passes solve the windowed least-squares
/// problem min ||r - dR gamma|| through the incrementally updated thin QR and
/// apply the damped secant update
///   x_next = x_nu + omega r - (dX + omega dR) gamma.
/// Degenerate windows fall back to the damped fixed-point step.
inline Eigen::VectorXd qn_update(QnWorkspace& ws, const Eigen::VectorXd& x_nu,
                                 const Eigen::VectorXd& x_tilde,
                                 const QnConfig& cfg, int nu) {
  const Eigen::VectorXd r = x_tilde - x_nu;
  Eigen::VectorXd x_next;
  if (nu == 0 || !ws.has_previous()) {
    x_next = x_nu + cfg.omega0 * r;
  } else {
    // A pair with an unchanged solution carries no secant information (and
    // would poison the window when its residual difference is nonzero).
    const Eigen::VectorXd dx = x_nu - ws.previous_x();
    if (dx.lpNorm<Eigen::Infinity>() > 0.0)
      ws.push_pair(dx, r - ws.previous_r(), cfg.m);
    ws.drop_degenerate(cfg.drop_tol);
    x_next = x_nu + cfg.omega * r;
    if (ws.size() > 0) {
      const Eigen::VectorXd gamma = ws.qr().solve(r);
      for (int t = 0; t < ws.size(); ++t)
        x_next -= gamma[t] * (ws.dx(t) + cfg.omega * ws.dr(t));
    }
  }
  ws.remember(x_nu, r);
  return x_next;
}

}  // namespace sfisim

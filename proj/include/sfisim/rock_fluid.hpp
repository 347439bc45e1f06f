#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sfisim/errors.hpp"

namespace sfisim {

inline constexpr int kMaxPhases = 3;
inline constexpr double kSatTol = 1e-10;

/// Pressure-dependent fluid description of one phase.
///
/// The inverse formation volume factor follows the constant-compressibility
/// law b(p) = b_ref * exp((p - p_ref) * c); reservoir density is b * rho_S.
struct PhaseProps {
  std::string name;
  double b_ref = 1.0;              // inverse FVF at reference pressure [-]
  double compressibility = 0.0;    // [1/Pa]
  double viscosity = 1.0e-3;       // [Pa.s]
  double surface_density = 1000.;  // [kg/m^3]
  double relperm_n = 2.0;          // power-law exponent
};

struct RockFluidModel {
  std::vector<PhaseProps> phases;     // order: water, oil[, gas]
  double rock_compressibility = 0.0;  // [1/Pa]
  double p_ref = 0.0;                 // [Pa]
  Eigen::ArrayXd poro_ref;            // per cell [-]

  int num_phases() const { return static_cast<int>(phases.size()); }

  void validate(int num_cells) const {
    if (num_phases() < 2 || num_phases() > kMaxPhases)
      throw ConfigError("rockfluid: phase count must be 2 or 3");
    if (rock_compressibility < 0.0)
      throw ConfigError("rockfluid: rock compressibility must be >= 0");
    if (poro_ref.size() != num_cells)
      throw ConfigError("rockfluid: porosity field has " +
                        std::to_string(poro_ref.size()) +
                        " values, expected " + std::to_string(num_cells));
    if ((poro_ref <= 0.0).any() || (poro_ref >= 1.0).any())
      throw ConfigError("rockfluid: reference porosity must lie in (0,1)");
    for (const auto& ph : phases) {
      if (ph.b_ref <= 0.0 || ph.viscosity <= 0.0 || ph.surface_density <= 0.0 ||
          ph.compressibility < 0.0 || ph.relperm_n <= 0.0)
        throw ConfigError("rockfluid: invalid parameters for phase " + ph.name);
    }
  }
};

struct ValueDeriv {
  double value = 0.0;
  double deriv = 0.0;
};

/// Inverse FVF and db/dp at pressure p.
inline ValueDeriv b_of_p(const PhaseProps& ph, double p, double p_ref) {
  const double b = ph.b_ref * std::exp((p - p_ref) * ph.compressibility);
  return {b, ph.compressibility * b};
}

/// Porosity and dphi/dp for one cell.
inline ValueDeriv porosity(const RockFluidModel& m, double p, int cell) {
  const double phi =
      m.poro_ref[cell] * std::exp((p - m.p_ref) * m.rock_compressibility);
  return {phi, m.rock_compressibility * phi};
}

/// Relative permeabilities of all phases with analytic derivatives
/// d k_rl / d s_m over the full saturation vector.
struct RelPerm {
  std::array<double, kMaxPhases> kr{};
  std::array<std::array<double, kMaxPhases>, kMaxPhases> dkr{};
};

/// Power-law relative permeabilities; for three phases the oil curve is the
/// saturation-weighted interpolation k_ro = (s_w k_row + s_g k_rog)/(s_w+s_g)
/// between the oil-water and oil-gas curves, with k_ro -> k_row as
/// s_w + s_g -> 0. Saturations are clamped to [0,1] after a tolerance check.
inline RelPerm relperm(const RockFluidModel& m,
                       const std::array<double, kMaxPhases>& s_in) {
  const int np = m.num_phases();
  std::array<double, kMaxPhases> s{};
  for (int l = 0; l < np; ++l) {
    if (s_in[l] < -kSatTol || s_in[l] > 1.0 + kSatTol)
      throw std::domain_error("relperm: saturation " + std::to_string(s_in[l]) +
                              " of phase " + m.phases[l].name +
                              " outside [0,1]");
    s[l] = std::min(1.0, std::max(0.0, s_in[l]));
  }

  auto power = [](double sat, double n) -> ValueDeriv {
    if (sat <= 0.0) return {0.0, n > 1.0 ? 0.0 : n};
    return {std::pow(sat, n), n * std::pow(sat, n - 1.0)};
  };

  RelPerm out{};
  if (np == 2) {
    for (int l = 0; l < 2; ++l) {
      const auto v = power(s[l], m.phases[l].relperm_n);
      out.kr[l] = v.value;
      out.dkr[l][l] = v.deriv;
    }
    return out;
  }

  // Three phases: water, oil, gas.
  const auto krw = power(s[0], m.phases[0].relperm_n);
  const auto krg = power(s[2], m.phases[2].relperm_n);
  out.kr[0] = krw.value;
  out.dkr[0][0] = krw.deriv;
  out.kr[2] = krg.value;
  out.dkr[2][2] = krg.deriv;

  // k_row and k_rog share the same power law in s_o.
  const auto kro_curve = power(s[1], m.phases[1].relperm_n);
  const double a = kro_curve.value;  // k_row
  const double b = kro_curve.value;  // k_rog
  const double denom = s[0] + s[2];
  if (denom <= 1e-12) {
    out.kr[1] = a;
    out.dkr[1][1] = kro_curve.deriv;
    return out;
  }
  out.kr[1] = (s[0] * a + s[2] * b) / denom;
  out.dkr[1][0] = s[2] * (a - b) / (denom * denom);
  out.dkr[1][2] = s[0] * (b - a) / (denom * denom);
  out.dkr[1][1] = (s[0] * kro_curve.deriv + s[2] * kro_curve.deriv) / denom;
  return out;
}

/// Phase mobilities lambda_l = k_rl / mu_l with the same derivative layout.
inline RelPerm mobility(const RockFluidModel& m,
                        const std::array<double, kMaxPhases>& s) {
  RelPerm mob = relperm(m, s);
  for (int l = 0; l < m.num_phases(); ++l) {
    const double inv_mu = 1.0 / m.phases[l].viscosity;
    mob.kr[l] *= inv_mu;
    for (int k = 0; k < m.num_phases(); ++k) mob.dkr[l][k] *= inv_mu;
  }
  return mob;
}

}  // namespace sfisim

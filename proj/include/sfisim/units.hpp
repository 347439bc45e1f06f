#pragma once

// Conversions between the field units used in case descriptions and the SI
// quantities used internally. All solver code works in SI.

namespace sfisim::units {

inline constexpr double psi = 6894.757;             // Pa
inline constexpr double foot = 0.3048;              // m
inline constexpr double centipoise = 1.0e-3;        // Pa.s
inline constexpr double millidarcy = 9.869233e-16;  // m^2
inline constexpr double day = 86400.0;              // s
inline constexpr double gravity = 9.80665;          // m/s^2

inline double psi_to_pa(double v) { return v * psi; }
inline double pa_to_psi(double v) { return v / psi; }
inline double ft_to_m(double v) { return v * foot; }
inline double m_to_ft(double v) { return v / foot; }
inline double cp_to_pas(double v) { return v * centipoise; }
inline double pas_to_cp(double v) { return v / centipoise; }
inline double md_to_m2(double v) { return v * millidarcy; }
inline double m2_to_md(double v) { return v / millidarcy; }
inline double per_psi_to_per_pa(double v) { return v / psi; }
inline double per_pa_to_per_psi(double v) { return v * psi; }
inline double days_to_s(double v) { return v * day; }
inline double s_to_days(double v) { return v / day; }
inline double ft3day_to_m3s(double v) { return v * foot * foot * foot / day; }
inline double m3s_to_ft3day(double v) { return v / (foot * foot * foot) * day; }

}  // namespace sfisim::units

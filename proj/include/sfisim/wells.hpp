#pragma once

#include <cmath>

#include "sfisim/errors.hpp"

namespace sfisim {

/// Point well in a single cell. Injectors are fixed reservoir-volume-rate
/// sources of one phase; producers are bottom-hole-pressure controlled and
/// drain every phase through a Peaceman index.
struct Well {
  enum class Type { RateInjector, BhpProducer };
  Type type = Type::RateInjector;
  int cell = 0;
  double rate = 0.0;        // injector: reservoir-volume rate [m^3/s]
  int phase = 0;            // injector: injected phase index
  double bhp = 0.0;         // producer: bottom-hole pressure [Pa]
  double well_index = 0.0;  // producer: Peaceman index [m^3]
};

/// WI = 2 pi K dz / ln(r_e / r_w) with r_e = 0.2 dx.
inline double peaceman_well_index(double perm, double cell_dz, double cell_dx,
                                  double r_well = 0.1) {
  const double r_eff = 0.2 * cell_dx;
  if (r_eff <= r_well)
    throw ConfigError("well: equivalent radius 0.2*dx must exceed r_w");
  return 2.0 * M_PI * perm * cell_dz / std::log(r_eff / r_well);
}

}  // namespace sfisim

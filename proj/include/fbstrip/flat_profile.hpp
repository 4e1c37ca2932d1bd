#pragma once

// The one-parameter flat family u_t(y) = m (1 - y/t)_+ and its energy
// density per unit period.  t = +inf is the distinguished "no free boundary"
// member with density h^2/2; it is always handled exactly, never by
// evaluating at some large t.

#include <cmath>
#include <limits>

#include "fbstrip/regimes.hpp"

namespace fbstrip {

struct FlatProfile {
  double t = 1.0;  // free-boundary height, +inf for the all-positive limit
  double m = 1.0;

  double operator()(double y) const {
    if (std::isinf(t)) return m;
    return m * std::max(0.0, 1.0 - y / t);
  }
};

// E(t) = m^2/t + (h^2 - ((h-t)_+)^2)/2; E(inf) = h^2/2.
inline double flat_energy_density(double m, double h, double t) {
  if (!(std::isfinite(m) && m > 0.0)) throw ConfigError("m", "must be finite and > 0");
  if (!(std::isfinite(h) && h > 0.0)) throw ConfigError("h", "must be finite and > 0");
  if (std::isinf(t) && t > 0.0) return 0.5 * h * h;
  if (!(std::isfinite(t) && t > 0.0))
    throw ConfigError("t", "must be > 0 (finite or +inf)");
  return detail::flat_energy_raw(m, h, t);
}

struct BestFlat {
  double t = std::numeric_limits<double>::infinity();
  double energy = 0.0;
};

// Global minimizer of E over t in (0, inf].  The only interior candidate is
// the first cubic root t_h; the boundary candidate is E(inf) = h^2/2.
// Near-ties (within 1e-12) resolve to the finite t_h.
inline BestFlat best_flat_profile(double m, double h) {
  const double e_inf = flat_energy_density(m, h, std::numeric_limits<double>::infinity());
  const double disc = cubic_value(m, h, 2.0 * h / 3.0);
  if (disc > detail::cubic_eq_tol(m)) return {std::numeric_limits<double>::infinity(), e_inf};
  const double th = flat_height_root(m, h);
  const double e_th = flat_energy_density(m, h, th);
  if (e_th <= e_inf + 1e-12 * std::max(1.0, e_inf)) return {th, e_th};
  return {std::numeric_limits<double>::infinity(), e_inf};
}

// Energy per period of the boundary datum profile u_gamma.
inline double dirichlet_datum_energy(const ProblemParams& p) {
  validate(p);
  return p.lambda * flat_energy_density(p.m, p.h, p.gamma);
}

}  // namespace fbstrip

#pragma once

// Closed-form regime map of the flat (one-dimensional) energy landscape.
//
// The flat profile of height t has energy density E(t) = m^2/t +
// (h^2 - ((h-t)_+)^2)/2, and E'(t) = -(t^3 - h t^2 + m^2)/t^2 for t < h.
// Everything here reduces to the cubic p(t) = t^3 - h t^2 + m^2:
//   * p has a positive root iff h >= h_sharp = 3 (m/2)^(2/3);
//   * t_h is the first positive root (local minimum of E);
//   * for h in [h_sharp, h_star), h_star = 3 (m/sqrt 2)^(2/3), there is a
//     unique tau_h > t_h on the far decreasing branch with E(tau_h) = E(t_h).
// Ranges of gamma with a guaranteed non-flat minimizer follow from comparing
// gamma against t_h and tau_h.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fbstrip/params.hpp"

namespace fbstrip {

struct CriticalHeights {
  double h_sharp = 0.0;  // first positive cubic root appears
  double h_star = 0.0;   // flat minimum at t_h ties with the t -> inf value
};

inline CriticalHeights critical_heights(double m) {
  if (!(std::isfinite(m) && m > 0.0))
    throw ConfigError("m", "must be finite and > 0");
  return {3.0 * std::pow(m / 2.0, 2.0 / 3.0),
          3.0 * std::pow(m / std::sqrt(2.0), 2.0 / 3.0)};
}

inline double cubic_value(double m, double h, double t) {
  return t * t * t - h * t * t + m * m;
}

namespace detail {

// |p(2h/3)| below this is treated as the degenerate double root t = 2h/3.
inline double cubic_eq_tol(double m) { return 1e-12 * m * m; }

// Bisection + Newton polish for a root of p in [lo, hi], sign change assumed.
inline double cubic_root_in(double m, double h, double lo, double hi) {
  double plo = cubic_value(m, h, lo);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double pm = cubic_value(m, h, mid);
    if ((pm > 0.0) == (plo > 0.0)) {
      lo = mid;
      plo = pm;
    } else {
      hi = mid;
    }
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double dp = t * (3.0 * t - 2.0 * h);
    if (dp == 0.0) break;
    const double step = cubic_value(m, h, t) / dp;
    const double next = t - step;
    if (next > lo * 0.5 && next < hi * 2.0 && std::isfinite(next)) t = next;
  }
  return t;
}

}  // namespace detail

// First positive root of t^3 - h t^2 + m^2.  Exists iff h >= h_sharp; at the
// degenerate boundary the double root 2h/3 is returned.
inline double flat_height_root(double m, double h) {
  if (!(std::isfinite(m) && m > 0.0)) throw ConfigError("m", "must be finite and > 0");
  if (!(std::isfinite(h) && h > 0.0)) throw ConfigError("h", "must be finite and > 0");
  const double tc = 2.0 * h / 3.0;
  const double disc = cubic_value(m, h, tc);  // = m^2 - (4/27) h^3
  const double tol = detail::cubic_eq_tol(m);
  if (disc > tol)
    throw NoRootError("flat_height_root: no positive root, h < h_sharp");
  if (disc >= -tol) return tc;
  // p(0+) = m^2 > 0 > p(2h/3): the first root lives in (0, 2h/3).
  return detail::cubic_root_in(m, h, 1e-14 * h, tc);
}

namespace detail {

// Second positive root of the cubic, in (2h/3, h); requires h > h_sharp.
inline double cubic_second_root(double m, double h) {
  return cubic_root_in(m, h, 2.0 * h / 3.0, h);
}

inline double flat_energy_raw(double m, double h, double t) {
  const double d = std::max(h - t, 0.0);
  return m * m / t + 0.5 * (h * h - d * d);
}

// tau_threshold core; returns +inf when the balance point runs away (h at or
// beyond h_star up to rounding).
inline double tau_threshold_unchecked(double m, double h) {
  const double tc = 2.0 * h / 3.0;
  if (std::abs(cubic_value(m, h, tc)) <= cubic_eq_tol(m)) return tc;  // h == h_sharp
  const double th = flat_height_root(m, h);
  const double e0 = flat_energy_raw(m, h, th);
  auto balance = [&](double tau) { return flat_energy_raw(m, h, tau) - e0; };
  // E has a local max at the second root t2; past it E decreases strictly to
  // h^2/2, so the balance function changes sign exactly once on (t2, inf)
  // whenever e0 > h^2/2.
  double lo = cubic_second_root(m, h);
  if (balance(lo) < 0.0) return lo;  // only by rounding, h ~ h_sharp
  double hi = lo;
  for (int it = 0; it < 80; ++it) {
    hi *= 2.0;
    if (balance(hi) <= 0.0) break;
    if (hi > 1e12 * h) return std::numeric_limits<double>::infinity();
  }
  if (balance(hi) > 0.0) return std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Balance height tau_h > t_h with E(tau_h) = E(t_h), defined for
// h in [h_sharp, h_star).  At h = h_sharp, tau_h = t_h = 2h/3.
inline double tau_threshold(double m, double h) {
  const auto ch = critical_heights(m);
  const double tc = 2.0 * h / 3.0;
  const bool at_sharp = std::abs(cubic_value(m, h, tc)) <= detail::cubic_eq_tol(m);
  if (h < ch.h_sharp && !at_sharp)
    throw ConfigError("h", "tau_threshold requires h >= h_sharp");
  if (h >= ch.h_star)
    throw ConfigError("h", "tau_threshold requires h < h_star");
  const double tau = detail::tau_threshold_unchecked(m, h);
  if (!std::isfinite(tau))
    throw ConfigError("h", "tau_threshold: balance point diverges (h too close to h_star)");
  return tau;
}

enum class GammaClass { NonFlatGuaranteed, NoGuarantee };

struct RegimeReport {
  double h_sharp = 0.0;
  double h_star = 0.0;
  std::optional<double> t_h;    // present iff h >= h_sharp
  std::optional<double> tau_h;  // present iff h in [h_sharp, h_star)
  GammaClass gamma_class = GammaClass::NoGuarantee;
};

// Decides whether every global minimizer at these parameters is non-flat.
// The guaranteed ranges of gamma are open: (0, inf) below h_sharp,
// (0, t_h) u (tau_h, inf) in [h_sharp, h_star), and (0, t_h) at or above
// h_star.  Boundary values of gamma classify as NoGuarantee.
inline RegimeReport classify_gamma(const ProblemParams& p) {
  validate(p);
  RegimeReport rep;
  const auto ch = critical_heights(p.m);
  rep.h_sharp = ch.h_sharp;
  rep.h_star = ch.h_star;
  const double disc = cubic_value(p.m, p.h, 2.0 * p.h / 3.0);
  const bool have_root = disc <= detail::cubic_eq_tol(p.m);
  if (!have_root) {
    rep.gamma_class = GammaClass::NonFlatGuaranteed;
    return rep;
  }
  rep.t_h = flat_height_root(p.m, p.h);
  bool nonflat = p.gamma < *rep.t_h;
  if (p.h < ch.h_star) {
    const double tau = detail::tau_threshold_unchecked(p.m, p.h);
    if (std::isfinite(tau)) {
      rep.tau_h = tau;
      nonflat = nonflat || p.gamma > tau;
    }
  }
  rep.gamma_class = nonflat ? GammaClass::NonFlatGuaranteed : GammaClass::NoGuarantee;
  return rep;
}

}  // namespace fbstrip

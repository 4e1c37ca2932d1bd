#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "fbstrip/common.hpp"
#include "fbstrip/evaluate.hpp"
#include "fbstrip/minimize.hpp"

namespace fbstrip {

struct QuadratureSpec {
  int angular = 512;
  int radial = 64;
};

// Largest radius at which the ball about the pinning point stays inside the
// neighborhood where the boundary density is meaningful.
inline double weiss_radius_bound(const ProblemParams& p) {
  return 0.5 * std::min({p.gamma, p.h - p.gamma, p.lambda});
}

namespace detail {

inline void validate_quadrature(const QuadratureSpec& q) {
  if (q.angular < 4) throw ConfigError("quadrature.angular", "must be >= 4");
  if (q.radial < 1) throw ConfigError("quadrature.radial", "must be >= 1");
}

// Circle integral \oint_{\partial B_r(c)} f dH^1 with angular nodes at the
// half-step offsets theta_p = (p + 1/2) 2pi/na.  On a periodic integrand this
// coincides with the trapezoid rule, and the offset keeps nodes off the axis
// so half-plane indicators are integrated without an O(1/na) bias.
template <class Ev, class Fn>
double circle_integral(const Ev& ev, Vec2 c, double r, int na, Fn&& f) {
  const double dth = 2.0 * std::numbers::pi / na;
  std::vector<double> slot(na);
  parallel_chunks(na, [&](int, int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      const double th = (p + 0.5) * dth;
      const double cs = std::cos(th), sn = std::sin(th);
      const PointSample s = ev.at(c.x + r * cs, c.y + r * sn);
      slot[p] = f(s, cs, sn, c.y + r * sn) * r * dth;
    }
  });
  return pairwise_sum(slot);
}

// Disc integral over B_r(c): midpoint rule on annuli, same angular offsets.
template <class Ev, class Fn>
double disc_integral(const Ev& ev, Vec2 c, double r, int na, int nr, Fn&& f) {
  const double dth = 2.0 * std::numbers::pi / na;
  const double dr = r / nr;
  std::vector<double> slot(na);
  parallel_chunks(na, [&](int, int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      const double th = (p + 0.5) * dth;
      const double cs = std::cos(th), sn = std::sin(th);
      double acc = 0.0;
      for (int q = 0; q < nr; ++q) {
        const double rho = (q + 0.5) * dr;
        const PointSample s = ev.at(c.x + rho * cs, c.y + rho * sn);
        acc += f(s, c.y + rho * sn) * rho;
      }
      slot[p] = acc * dr * dth;
    }
  });
  return pairwise_sum(slot);
}

template <class Ev, class WeightFn>
double phi_impl(const Ev& ev, Vec2 c, double r, int na, int nr, WeightFn&& weight,
                double chi_thr) {
  const double bulk = disc_integral(ev, c, r, na, nr, [&](const PointSample& s, double y) {
    double v = s.grad.x * s.grad.x + s.grad.y * s.grad.y;
    if (s.u > chi_thr) v += weight(y);
    return v;
  });
  const double ring = circle_integral(
      ev, c, r, na, [](const PointSample& s, double, double, double) { return s.u * s.u; });
  return bulk / (r * r) - ring / (r * r * r);
}

template <class Ev, class WeightFn, class BandFn>
double identity_residual_impl(const Ev& ev, Vec2 c, double rho, double sigma, int na,
                              int nouter, int ndisc, WeightFn&& weight, double chi_thr,
                              BandFn&& band, bool with_band) {
  const double phi_hi = phi_impl(ev, c, sigma, na, ndisc, weight, chi_thr);
  const double phi_lo = phi_impl(ev, c, rho, na, ndisc, weight, chi_thr);
  const double dr = (sigma - rho) / nouter;
  double a_term = 0.0, b_term = 0.0;
  for (int m = 0; m < nouter; ++m) {
    const double r = rho + (m + 0.5) * dr;
    const double ring =
        circle_integral(ev, c, r, na, [r](const PointSample& s, double cs, double sn, double) {
          const double dn = s.grad.x * cs + s.grad.y * sn - s.u / r;
          return 2.0 * dn * dn;
        });
    a_term += ring / (r * r) * dr;
    if (with_band) {
      const double disc = disc_integral(ev, c, r, na, ndisc, [&](const PointSample& s, double y) {
        return s.u > chi_thr ? band(y) : 0.0;
      });
      b_term += disc / (r * r * r) * dr;
    }
  }
  return std::abs(phi_hi - phi_lo - a_term + b_term);
}

}  // namespace detail

// Density of the ball functional r^{-2} \int_{B_r} (|grad u|^2 + chi weight(y))
// - r^{-3} \oint u^2 at an arbitrary center; weight receives the absolute
// height of the quadrature node.
template <class Ev, class WeightFn>
double weiss_density_at(const Ev& ev, Vec2 center, double r, WeightFn weight,
                        QuadratureSpec q = {}) {
  detail::validate_quadrature(q);
  if (!(r > 0.0) || !std::isfinite(r))
    throw ConfigError("weiss.r", "must be positive and finite");
  return detail::phi_impl(ev, center, r, q.angular, q.radial, weight, ev.chi_threshold());
}

// Density centered at the pinning point (-lambda/2, gamma), weight h - y,
// positivity read off the sharp indicator at half the final smoothing width.
inline double weiss_density(const Solution& sol, double r, QuadratureSpec q = {}) {
  validate(sol.params);
  require_gamma_below_h(sol.params, "weiss_density");
  const double r0 = weiss_radius_bound(sol.params);
  if (!(r > 0.0 && r < r0))
    throw ConfigError("weiss.r", "must lie in (0, " + std::to_string(r0) + ")");
  const Grid& g = sol.field.grid;
  QuadratureSpec qq = q;
  qq.radial = std::max(q.radial, (int)std::ceil(r / g.dx));
  const GridEvaluator ev(sol.field, 0.5 * sol.eps_final);
  const double h = sol.params.h;
  return weiss_density_at(ev, Vec2{-0.5 * g.lambda, sol.field.gamma}, r,
                          [h](double y) { return h - y; }, qq);
}

// Constant-coefficient variant used for blow-up limits, centered at the origin
// of the rescaled coordinates.
template <class Ev>
double weiss_density_profile(const Ev& ev, double coeff, double r, QuadratureSpec q = {}) {
  return weiss_density_at(ev, Vec2{0.0, 0.0}, r, [coeff](double) { return coeff; }, q);
}

// |Phi(sigma) - Phi(rho) - A + B| where A integrates the deviation from
// 1-homogeneity on circles and B the band weight over growing discs.
inline double weiss_identity_residual(const Solution& sol, double rho, double sigma,
                                      QuadratureSpec q = {}) {
  validate(sol.params);
  require_gamma_below_h(sol.params, "weiss_identity_residual");
  detail::validate_quadrature(q);
  const double r0 = weiss_radius_bound(sol.params);
  if (!(rho > 0.0 && rho < sigma))
    throw ConfigError("weiss.rho", "need 0 < rho < sigma");
  if (!(sigma < r0))
    throw ConfigError("weiss.sigma", "must lie below " + std::to_string(r0));
  const Grid& g = sol.field.grid;
  const int ndisc = std::max(q.radial, (int)std::ceil(sigma / g.dx));
  const GridEvaluator ev(sol.field, 0.5 * sol.eps_final);
  const double h = sol.params.h, gamma = sol.field.gamma;
  return detail::identity_residual_impl(
      ev, Vec2{-0.5 * g.lambda, gamma}, rho, sigma, q.angular, q.radial, ndisc,
      [h](double y) { return h - y; }, 0.5 * sol.eps_final,
      [gamma](double y) { return y - gamma; }, true);
}

// Constant-coefficient functional: the band term is absent.
template <class Ev>
double weiss_identity_residual_profile(const Ev& ev, double coeff, double rho, double sigma,
                                       QuadratureSpec q = {}) {
  detail::validate_quadrature(q);
  if (!(rho > 0.0 && rho < sigma))
    throw ConfigError("weiss.rho", "need 0 < rho < sigma");
  return detail::identity_residual_impl(
      ev, Vec2{0.0, 0.0}, rho, sigma, q.angular, q.radial, q.radial,
      [coeff](double) { return coeff; }, ev.chi_threshold(), [](double) { return 0.0; },
      false);
}

struct WeissSeries {
  std::vector<double> radii;
  std::vector<double> phi;
  std::vector<std::tuple<double, double, double>> identity_residuals;  // (rho, sigma, res)
  QuadratureSpec quadrature;
};

inline WeissSeries compute_weiss_series(const Solution& sol, std::span<const double> radii,
                                        QuadratureSpec q = {}) {
  WeissSeries s;
  s.quadrature = q;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw ConfigError("weiss.radii", "must be strictly increasing");
    s.radii.push_back(radii[i]);
    s.phi.push_back(weiss_density(sol, radii[i], q));
  }
  for (std::size_t i = 0; i + 1 < radii.size(); ++i)
    s.identity_residuals.emplace_back(
        radii[i], radii[i + 1], weiss_identity_residual(sol, radii[i], radii[i + 1], q));
  return s;
}

// ---------------------------------------------------------------------------
// blow-up

// u_n(z) = u(x0 + rho z)/rho sampled on the square patch [-R, R]^2 with
// (2n+1)^2 nodes; consumers restrict to the inscribed ball.
struct BlowupField {
  double rho = 0.0;
  double R = 0.0;
  int n = 0;
  double dz = 0.0;
  double threshold = 0.0;  // positivity threshold in rescaled units
  ProblemParams params{};
  std::vector<double> values;

  int width() const { return 2 * n + 1; }
  double z(int k) const { return -R + k * dz; }
  double at(int i, int j) const { return values[(std::size_t)j * width() + i]; }
  double& at(int i, int j) { return values[(std::size_t)j * width() + i]; }
};

inline BlowupField blowup_rescale(const Solution& sol, double rho, double R) {
  validate(sol.params);
  require_gamma_below_h(sol.params, "blowup_rescale");
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw ConfigError("blowup.rho", "must be positive and finite");
  if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("blowup.R", "must be positive and finite");
  if (!(rho * R < weiss_radius_bound(sol.params)))
    throw ConfigError("blowup.window", "rho*R exceeds the valid neighborhood");
  const Grid& g = sol.field.grid;
  BlowupField bf;
  bf.rho = rho;
  bf.R = R;
  bf.n = std::max(32, (int)std::ceil(rho * R / g.dx));
  bf.dz = R / bf.n;
  bf.threshold = 0.5 * sol.eps_final / rho;
  bf.params = sol.params;
  const int w = bf.width();
  bf.values.resize((std::size_t)w * w);
  const GridEvaluator ev(sol.field, 0.5 * sol.eps_final);
  const BlowupView bv(ev, Vec2{-0.5 * g.lambda, sol.field.gamma}, rho);
  parallel_chunks(w, [&](int, int lo, int hi) {
    for (int j = lo; j < hi; ++j)
      for (int i = 0; i < w; ++i) bf.values[(std::size_t)j * w + i] = bv.at(bf.z(i), bf.z(j)).u;
  });
  return bf;
}

enum class BlowupLabel { Zero, HalfPlane, Other };

inline const char* to_string(BlowupLabel l) {
  switch (l) {
    case BlowupLabel::Zero: return "zero";
    case BlowupLabel::HalfPlane: return "half_plane";
    default: return "other";
  }
}

struct BlowupClass {
  BlowupLabel label = BlowupLabel::Other;
  double distance_zero = 0.0;
  double distance_halfplane = 0.0;
  double distance_cone = 0.0;
};

// Sup-distance on B_1 to the two admissible limits and to the excluded cone.
// The cone winning outright is reported as Other.
inline BlowupClass classify_blowup(const BlowupField& f, double coeff = -1.0,
                                   double tol = -1.0) {
  if (f.n <= 0 || f.values.empty())
    throw ConfigError("blowup.field", "empty field");
  if (!(f.R >= 1.0))
    throw ConfigError("blowup.R", "classification needs the field on B_1");
  if (coeff <= 0.0) coeff = f.params.h - f.params.gamma;
  if (!(coeff > 0.0)) throw ConfigError("blowup.coeff", "must be positive");
  if (tol <= 0.0) tol = 0.1 * coeff;
  BlowupClass out;
  const int w = f.width();
  for (int j = 0; j < w; ++j) {
    const double t = f.z(j);
    for (int i = 0; i < w; ++i) {
      const double s = f.z(i);
      if (s * s + t * t > 1.0) continue;
      const double v = f.at(i, j);
      out.distance_zero = std::max(out.distance_zero, std::abs(v));
      out.distance_halfplane =
          std::max(out.distance_halfplane, std::abs(v - coeff * std::max(-t, 0.0)));
      out.distance_cone = std::max(out.distance_cone, std::abs(v - coeff * std::abs(s)));
    }
  }
  const double best = std::min(out.distance_zero, out.distance_halfplane);
  if (out.distance_cone < best)
    out.label = BlowupLabel::Other;
  else if (best <= tol)
    out.label = out.distance_zero <= out.distance_halfplane ? BlowupLabel::Zero
                                                            : BlowupLabel::HalfPlane;
  else
    out.label = BlowupLabel::Other;
  return out;
}

enum class BlowupShape { Zero, HalfPlane, Cone };

// Exact sample fields for the classifier; values are produced by the same
// expressions classify_blowup compares against, so distances are exactly zero.
inline BlowupField synthetic_blowup(BlowupShape shape, const ProblemParams& p, double R = 1.0,
                                    int n = 64) {
  validate(p);
  require_gamma_below_h(p, "synthetic_blowup");
  if (n < 1) throw ConfigError("blowup.n", "must be >= 1");
  if (!(R > 0.0)) throw ConfigError("blowup.R", "must be positive");
  BlowupField bf;
  bf.rho = 0.0;
  bf.R = R;
  bf.n = n;
  bf.dz = R / n;
  bf.threshold = 0.0;
  bf.params = p;
  const int w = bf.width();
  bf.values.resize((std::size_t)w * w);
  const double coeff = p.h - p.gamma;
  for (int j = 0; j < w; ++j) {
    const double t = bf.z(j);
    for (int i = 0; i < w; ++i) {
      const double s = bf.z(i);
      double v = 0.0;
      if (shape == BlowupShape::HalfPlane) v = coeff * std::max(-t, 0.0);
      if (shape == BlowupShape::Cone) v = coeff * std::abs(s);
      bf.values[(std::size_t)j * w + i] = v;
    }
  }
  return bf;
}

// Symmetric Hausdorff distance between the thresholded interface node sets of
// two patches, outside the eta-neighborhood of the nonnegative t-axis (where
// the interface meets the pinned line and convergence is not expected).
inline double hausdorff_fb_distance(const BlowupField& a, const BlowupField& b, double eta,
                                    double radius = -1.0) {
  if (!(eta >= 0.0)) throw ConfigError("hausdorff.eta", "must be >= 0");
  if (radius <= 0.0) radius = std::min(a.R, b.R);
  const double r2 = radius * radius;
  auto boundary = [&](const BlowupField& f) {
    std::vector<Vec2> pts;
    const int w = f.width();
    for (int j = 0; j < w; ++j)
      for (int i = 0; i < w; ++i) {
        if (!(f.at(i, j) > f.threshold)) continue;
        const double s = f.z(i), t = f.z(j);
        if (s * s + t * t > r2) continue;
        bool edge = false;
        const int ni[4] = {i - 1, i + 1, i, i};
        const int nj[4] = {j, j, j - 1, j + 1};
        for (int q = 0; q < 4 && !edge; ++q)
          if (ni[q] >= 0 && ni[q] < w && nj[q] >= 0 && nj[q] < w &&
              !(f.at(ni[q], nj[q]) > f.threshold))
            edge = true;
        if (!edge) continue;
        const double axis_dist = t >= 0.0 ? std::abs(s) : std::hypot(s, t);
        if (axis_dist <= eta) continue;
        pts.push_back({s, t});
      }
    return pts;
  };
  const auto pa = boundary(a), pb = boundary(b);
  if (pa.empty() || pb.empty())
    throw NotDefinedError("hausdorff_fb_distance: empty interface node set");
  auto directed = [](const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
    double worst = 0.0;
    for (const Vec2& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

// ---------------------------------------------------------------------------
// nondegeneracy probe

struct ProbeReport {
  double c_emp = std::numeric_limits<double>::infinity();
  int qualifying = 0;
  int attempted = 0;
  double k = 0.0;
};

// Random balls avoiding the pinning corner; wherever u is nontrivial on the
// inner ball B_{kr}, the scaled circle average is compared against
// sqrt(h - y_c - kr) and the smallest quotient is reported.
inline ProbeReport nondegeneracy_probe(const Solution& sol, double k, int samples,
                                       std::uint64_t seed = 20240817u,
                                       QuadratureSpec q = {}) {
  validate(sol.params);
  if (!(k > 0.0 && k < 1.0)) throw ConfigError("probe.k", "must lie in (0, 1)");
  if (samples <= 0) throw ConfigError("probe.samples", "must be positive");
  detail::validate_quadrature(q);
  const Grid& g = sol.field.grid;
  const double h = sol.params.h, gamma = sol.field.gamma;
  const double rmin = 4.0 * g.dx;
  const double rmax = std::max(2.0 * rmin, 0.2 * std::min(g.lambda, std::min(h, g.y_max)));
  const GridEvaluator ev(sol.field, 0.5 * sol.eps_final);
  const double thr = 0.5 * sol.eps_final;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(rmin, rmax);
  std::uniform_real_distribution<double> ux(-0.5 * g.lambda, 0.5 * g.lambda);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  ProbeReport rep;
  rep.k = k;
  rep.attempted = samples;
  for (int it = 0; it < samples; ++it) {
    const double r = ur(rng);
    const double xc = ux(rng);
    const double ylo = r + g.dy;
    const double yhi = std::min(h - k * r, g.y_max - r) - g.dy;
    const double yc = ylo + (yhi - ylo) * u01(rng);
    if (!(yhi > ylo)) continue;
    // periodic distance to the pinning corner
    const double wx = xc + 0.5 * g.lambda -
                      g.lambda * std::round((xc + 0.5 * g.lambda) / g.lambda);
    if (std::hypot(wx, yc - gamma) < r + 2.0 * g.dx) continue;
    // nontriviality of u on the inner ball
    bool nontrivial = ev.at(xc, yc).u > thr;
    for (int a = 0; a < 16 && !nontrivial; ++a) {
      const double th = (a + 0.5) * (2.0 * std::numbers::pi / 16.0);
      for (int b = 1; b <= 8 && !nontrivial; ++b) {
        const double rr = k * r * b / 8.0;
        if (ev.at(xc + rr * std::cos(th), yc + rr * std::sin(th)).u > thr) nontrivial = true;
      }
    }
    if (!nontrivial) continue;
    const double mean =
        detail::circle_integral(ev, Vec2{xc, yc}, r, q.angular,
                                [](const PointSample& s, double, double, double) { return s.u; }) /
        (2.0 * std::numbers::pi * r);
    const double scale = std::sqrt(h - yc - k * r);
    rep.c_emp = std::min(rep.c_emp, mean / r / scale);
    ++rep.qualifying;
  }
  if (rep.qualifying == 0)
    throw NotDefinedError("nondegeneracy_probe: no qualifying balls");
  return rep;
}

}  // namespace fbstrip

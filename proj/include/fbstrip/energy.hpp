#pragma once

// Discrete energy on the strip grid.
//
// Cells are indexed by their lower-left node (i, j), i periodic, j in
// [0, ny).  Per cell the integrand is sampled once at the center:
//   |grad u|^2 from the bilinear interpolant's cell-center gradient,
//   chi-term   H_eps(cell average of u) * (h - y_center)_+.
// The gradient of the discrete energy with respect to free node values is
// exact (analytic differentiation of the same expression), which is what the
// finite-difference acceptance check verifies.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbstrip/grid.hpp"

namespace fbstrip {

// C^1 smoothed indicator: 0 for s <= 0, 3(s/eps)^2 - 2(s/eps)^3 inside the
// band, 1 for s >= eps.  Monotone in s; nonincreasing in eps pointwise.
inline double smoothed_indicator(double s, double eps) {
  if (s <= 0.0) return 0.0;
  if (s >= eps) return 1.0;
  const double q = s / eps;
  return q * q * (3.0 - 2.0 * q);
}

inline double smoothed_indicator_deriv(double s, double eps) {
  if (s <= 0.0 || s >= eps) return 0.0;
  return 6.0 * s * (eps - s) / (eps * eps * eps);
}

// Continuation schedule for the indicator width: geometric halving from
// eps_start down to a floor measured in cells (floor_cells * dx).
struct SmoothingSchedule {
  std::vector<double> stages;

  double final_eps() const { return stages.back(); }
};

inline SmoothingSchedule make_schedule(const Grid& g, double eps_start = 0.2,
                                       double floor_cells = 4.0) {
  if (!(eps_start > 0.0)) throw ConfigError("smoothing.eps_start", "must be > 0");
  if (!(floor_cells >= 0.25))
    throw ConfigError("smoothing.floor_cells", "must be >= 0.25 (resolution floor dx/4)");
  const double floor = floor_cells * g.dx;
  SmoothingSchedule s;
  double eps = std::max(eps_start, floor);
  s.stages.push_back(eps);
  while (eps > floor * (1.0 + 1e-12)) {
    eps = std::max(0.5 * eps, floor);
    s.stages.push_back(eps);
  }
  return s;
}

namespace detail {

struct CellGeom {
  double inv2dx, inv2dy, area;
};

// Sums one row of cells left to right; the only summation order used.
inline double cell_row_energy(const Field& f, int j, double eps, double h) {
  const Grid& g = f.grid;
  const CellGeom geo{0.5 / g.dx, 0.5 / g.dy, g.dx * g.dy};
  const double w = std::max(h - (j + 0.5) * g.dy, 0.0);
  const double* row0 = f.values.data() + g.idx(0, j);
  const double* row1 = f.values.data() + g.idx(0, j + 1);
  double sum = 0.0;
  // Differences are grouped pairwise so the x-mirrored cell evaluates to the
  // exact negation/copy; this keeps gradients of symmetric fields symmetric
  // to the last bit.
  for (int i = 0; i < g.nx; ++i) {
    const int ip = (i + 1 == g.nx) ? 0 : i + 1;
    const double u00 = row0[i], u10 = row0[ip];
    const double u01 = row1[i], u11 = row1[ip];
    const double ux = ((u10 - u00) + (u11 - u01)) * geo.inv2dx;
    const double uy = ((u01 - u00) + (u11 - u10)) * geo.inv2dy;
    const double ubar = 0.25 * ((u00 + u10) + (u01 + u11));
    double cell = ux * ux + uy * uy;
    if (w > 0.0) cell += smoothed_indicator(ubar, eps) * w;
    sum += cell * geo.area;
  }
  return sum;
}

inline double energy_impl(const Field& f, double eps, double h) {
  const int ny = f.grid.ny;
  const int blocks = (ny + kRowBlock - 1) / kRowBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_chunks(ny, [&](int b, int lo, int hi) {
    double s = 0.0;
    for (int j = lo; j < hi; ++j) s += cell_row_energy(f, j, eps, h);
    partial[b] = s;
  });
  return pairwise_sum(partial);
}

// Sharp-indicator variant (chi = [cell average > 0]); diagnostic only.
inline double energy_sharp_impl(const Field& f, double h) {
  const Grid& g = f.grid;
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double w = std::max(h - (j + 0.5) * g.dy, 0.0);
    double sum = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const int ip = (i + 1 == g.nx) ? 0 : i + 1;
      const double u00 = f.at(i, j), u10 = f.at(ip, j);
      const double u01 = f.at(i, j + 1), u11 = f.at(ip, j + 1);
      const double ux = ((u10 - u00) + (u11 - u01)) * 0.5 / g.dx;
      const double uy = ((u01 - u00) + (u11 - u10)) * 0.5 / g.dy;
      const double ubar = 0.25 * ((u00 + u10) + (u01 + u11));
      sum += (ux * ux + uy * uy + (ubar > 0.0 ? w : 0.0)) * g.dx * g.dy;
    }
    total += sum;
  }
  return total;
}

inline void gradient_impl(const Field& f, double eps, double h, std::vector<double>& out) {
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  out.assign(g.n_nodes(), 0.0);
  const double invdx = 1.0 / g.dx, invdy = 1.0 / g.dy;
  const double area = g.dx * g.dy;

  // Cell-center quantities for cell (a, b); corner = 0..3 encodes which
  // corner the differentiated node occupies (00, 10, 01, 11).
  auto cell_contrib = [&](int a, int b, int corner) -> double {
    const int ap = (a + 1 == nx) ? 0 : a + 1;
    const double u00 = f.at(a, b), u10 = f.at(ap, b);
    const double u01 = f.at(a, b + 1), u11 = f.at(ap, b + 1);
    const double ux = ((u10 - u00) + (u11 - u01)) * 0.5 * invdx;
    const double uy = ((u01 - u00) + (u11 - u10)) * 0.5 * invdy;
    const double w = std::max(h - (b + 0.5) * g.dy, 0.0);
    double chi = 0.0;
    if (w > 0.0) {
      const double ubar = 0.25 * ((u00 + u10) + (u01 + u11));
      chi = 0.25 * smoothed_indicator_deriv(ubar, eps) * w;
    }
    const double sx = (corner == 1 || corner == 3) ? 1.0 : -1.0;
    const double sy = (corner >= 2) ? 1.0 : -1.0;
    return (sx * ux * invdx + sy * uy * invdy + chi) * area;
  };

  parallel_chunks(ny + 1, [&](int, int lo, int hi) {
    for (int j = lo; j < hi; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (f.mask[g.idx(i, j)]) continue;
        const int im = (i == 0) ? nx - 1 : i - 1;
        // Pairwise grouping again: the mirror node sees the same two pair
        // sums with their members swapped, so the total matches exactly.
        double below = 0.0, above = 0.0;
        if (j < ny) below = cell_contrib(i, j, 0) + cell_contrib(im, j, 1);
        if (j > 0) above = cell_contrib(i, j - 1, 2) + cell_contrib(im, j - 1, 3);
        out[g.idx(i, j)] = below + above;
      }
    }
  });
}

}  // namespace detail

inline double energy(const Field& f, double eps, double h) {
  if (!(eps > 0.0)) throw ConfigError("eps", "must be > 0");
  validate_field(f);
  return detail::energy_impl(f, eps, h);
}

inline double energy_sharp(const Field& f, double h) {
  validate_field(f);
  return detail::energy_sharp_impl(f, h);
}

// Exact partial derivatives of the discrete energy; zero at constrained
// nodes by convention.
inline std::vector<double> energy_gradient(const Field& f, double eps, double h) {
  if (!(eps > 0.0)) throw ConfigError("eps", "must be > 0");
  validate_field(f);
  std::vector<double> out;
  detail::gradient_impl(f, eps, h, out);
  return out;
}

// Largest violation of discrete subharmonicity, max(0, -Lap5 u), over nodes
// whose 5-point stencil stays inside the open strip: 0 < j < ny, x wraps
// periodically, constrained nodes skipped.  No admissibility check; this is
// a pure stencil diagnostic usable on synthetic inputs.
inline double subharmonicity_residual(const Field& f) {
  const Grid& g = f.grid;
  const double invdx2 = 1.0 / (g.dx * g.dx), invdy2 = 1.0 / (g.dy * g.dy);
  double worst = 0.0;
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (f.mask[g.idx(i, j)]) continue;
      const int ip = (i + 1 == g.nx) ? 0 : i + 1;
      const int im = (i == 0) ? g.nx - 1 : i - 1;
      const double u = f.at(i, j);
      const double lap = (f.at(ip, j) - 2.0 * u + f.at(im, j)) * invdx2 +
                         (f.at(i, j + 1) - 2.0 * u + f.at(i, j - 1)) * invdy2;
      worst = std::max(worst, -lap);
    }
  }
  return worst;
}

}  // namespace fbstrip

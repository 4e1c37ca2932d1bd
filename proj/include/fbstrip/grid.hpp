#pragma once

// Periodic strip grid and nodal fields.
//
// The computational domain is one period (-lambda/2, lambda/2) x (0, y_max),
// x-periodic, truncated above at y_max > h.  Nodes sit at
//   x_i = -lambda/2 + i dx (i = 0..nx-1, column i = 0 is the seam x = +-lambda/2),
//   y_j = j dy            (j = 0..ny),
// so a field holds nx * (ny+1) values, row-major with y outermost.
//
// Dirichlet constraints:
//   * bottom row y = 0:                          u = m (boundary datum),
//   * seam column, nodes with y strictly > gamma: u = 0,
//   * top row y = y_max:                          u = 0 (truncation).
// The seam node at y <= gamma nearest gamma stays free.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fbstrip/params.hpp"

namespace fbstrip {

struct Grid {
  int nx = 0;  // cells in x (even)
  int ny = 0;  // cells in y
  double lambda = 0.0;
  double y_max = 0.0;
  double dx = 0.0;
  double dy = 0.0;

  double x(int i) const { return -0.5 * lambda + i * dx; }
  double y(int j) const { return j * dy; }
  int idx(int i, int j) const { return j * nx + i; }
  int n_nodes() const { return nx * (ny + 1); }
  int wrap(int i) const { return ((i % nx) + nx) % nx; }
};

inline Grid build_grid(const ProblemParams& p, int nx, int ny, double y_max) {
  validate(p);
  if (nx < 2 || nx % 2 != 0) throw ConfigError("grid.nx", "must be even and >= 2");
  if (ny < 1) throw ConfigError("grid.ny", "must be >= 1");
  if (!(std::isfinite(y_max) && y_max > p.h))
    throw ConfigError("grid.y_max", "must be finite and > h");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.lambda = p.lambda;
  g.y_max = y_max;
  g.dx = p.lambda / nx;
  g.dy = y_max / ny;
  return g;
}

// Nodal field with its constraint mask.  Value semantics; the grid is tiny
// and copied along.  `datum` is the bottom-row value (m for admissible
// fields; 0 is tolerated for degenerate test inputs).
struct Field {
  Grid grid;
  double datum = 0.0;
  double gamma = 0.0;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;  // 1 = Dirichlet-constrained node

  double& at(int i, int j) { return values[grid.idx(i, j)]; }
  double at(int i, int j) const { return values[grid.idx(i, j)]; }

  // Re-applies the Dirichlet values.  Does not clamp.
  void impose_constraints() {
    const int nx = grid.nx, ny = grid.ny;
    for (int i = 0; i < nx; ++i) values[grid.idx(i, 0)] = datum;
    for (int j = 1; j <= ny; ++j)
      if (grid.y(j) > gamma) values[grid.idx(0, j)] = 0.0;
    for (int i = 0; i < nx; ++i) values[grid.idx(i, ny)] = 0.0;
  }

  void clamp_nonnegative() {
    for (double& v : values) v = std::max(0.0, v);
  }
};

inline Field make_field(const Grid& g, double datum, double gamma, double fill = 0.0) {
  if (!(std::isfinite(datum) && datum >= 0.0))
    throw ConfigError("field.datum", "must be finite and >= 0");
  if (!(std::isfinite(gamma) && gamma > 0.0))
    throw ConfigError("field.gamma", "must be finite and > 0");
  Field f;
  f.grid = g;
  f.datum = datum;
  f.gamma = gamma;
  f.values.assign(g.n_nodes(), fill);
  f.mask.assign(g.n_nodes(), 0);
  for (int i = 0; i < g.nx; ++i) f.mask[g.idx(i, 0)] = 1;
  for (int j = 1; j <= g.ny; ++j)
    if (g.y(j) > gamma) f.mask[g.idx(0, j)] = 1;
  for (int i = 0; i < g.nx; ++i) f.mask[g.idx(i, g.ny)] = 1;
  f.impose_constraints();
  return f;
}

inline Field make_field(const Grid& g, const ProblemParams& p, double fill = 0.0) {
  return make_field(g, p.m, p.gamma, fill);
}

// Samples f(x, y) at every node.
template <class Fn>
Field sample(const Grid& g, double datum, double gamma, Fn&& fn) {
  Field f = make_field(g, datum, gamma);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.at(i, j) = fn(g.x(i), g.y(j));
  f.impose_constraints();
  return f;
}

// Flat profile sampled on the grid (solver initialization and tests).
inline Field sample_flat(const Grid& g, const ProblemParams& p, double t) {
  return sample(g, p.m, p.gamma,
                [&](double, double y) { return p.m * std::max(0.0, 1.0 - y / t); });
}

// Checks the constraint mask and sign invariant; used by the public energy
// entry points.  Throws ConfigError naming the first violated invariant.
inline void validate_field(const Field& f) {
  const Grid& g = f.grid;
  if ((int)f.values.size() != g.n_nodes() || f.values.size() != f.mask.size())
    throw ConfigError("field", "value/mask size mismatch");
  for (int i = 0; i < g.nx; ++i)
    if (f.at(i, 0) != f.datum)
      throw ConfigError("field", "bottom row must equal the boundary datum");
  for (int j = 1; j <= g.ny; ++j)
    if (g.y(j) > f.gamma && f.at(0, j) != 0.0)
      throw ConfigError("field", "seam nodes above gamma must be 0");
  for (int i = 0; i < g.nx; ++i)
    if (f.at(i, g.ny) != 0.0)
      throw ConfigError("field", "top row must be 0");
  for (double v : f.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("field", "values must be finite and >= 0");
}

}  // namespace fbstrip

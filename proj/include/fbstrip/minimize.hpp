#pragma once

// Projected descent on the smoothed energy with indicator continuation.
//
// Outer loop: the indicator width follows the halving schedule, each stage
// warm-started from the previous one.  Inner loop: Barzilai-Borwein steps
// with Armijo backtracking along the projection arc; the projection is
// "clamp at 0, then re-impose Dirichlet values".  Several starts run in
// sequence and the lowest final energy wins.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fbstrip/energy.hpp"
#include "fbstrip/flat_profile.hpp"

namespace fbstrip {

// Per-row symmetric-decreasing rearrangement.  Row values are stable-sorted
// descending and placed center-outward about x = 0: the x = 0 node takes the
// max, each following pair fills the next position left then right, and the
// seam node x = -lambda/2 takes the minimum.  Dirichlet values are
// re-imposed afterwards.  Even about x = 0 up to ties, nonincreasing in |x|.
inline void symmetrize(Field& f) {
  const Grid& g = f.grid;
  const int nx = g.nx, ic = nx / 2;
  std::vector<double> row(nx);
  for (int j = 0; j <= g.ny; ++j) {
    double* v = f.values.data() + g.idx(0, j);
    std::copy(v, v + nx, row.begin());
    std::stable_sort(row.begin(), row.end(), std::greater<double>());
    v[ic] = row[0];
    for (int k = 1; k < ic; ++k) {
      v[ic - k] = row[2 * k - 1];
      v[ic + k] = row[2 * k];
    }
    v[0] = row[nx - 1];
  }
  f.impose_constraints();
}

struct MinimizeOptions {
  double tol_grad_scale = 1e-6;  // converged when max|grad| <= scale * m / dx
  int max_iter_per_stage = 2000;
  double armijo = 1e-4;
  int max_backtracks = 45;
  int symmetrize_every = 0;  // 0 = rely on exactly-preserved start symmetry
  bool x_constant = false;   // restrict to x-constant fields (flat subspace)
  int checkpoint_every = 0;
  std::function<void(const Field&, int stage, int iter)> checkpoint_sink;
  // Observer sees every accepted iterate: (stage, iter, energy, max|grad|).
  std::function<void(int, int, double, double)> observer;
};

struct Solution {
  Field field;
  ProblemParams params;
  double energy = 0.0;        // smoothed energy at eps_final
  double energy_sharp = 0.0;  // same field, sharp indicator
  double eps_final = 0.0;
  double grad_norm = 0.0;  // final max|free gradient|
  int iterations = 0;
  int starts_used = 0;
  bool converged = false;
  std::string best_start;
};

namespace detail {

// Optimality residual of the bound-constrained problem: at a node pinned to
// the obstacle (u = 0) only a negative partial derivative counts, since the
// value can move upward only.  The plain |grad| would stay O(1) forever at
// clamped nodes next to the free boundary.
inline double projected_residual(const Field& u, const std::vector<double>& g) {
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (u.mask[k]) continue;
    const double r = (u.values[k] > 0.0) ? std::abs(g[k]) : std::max(0.0, -g[k]);
    worst = std::max(worst, r);
  }
  return worst;
}

inline void project(Field& f, bool x_constant) {
  if (x_constant) {
    const Grid& g = f.grid;
    for (int j = 0; j <= g.ny; ++j) {
      double s = 0.0;
      for (int i = 0; i < g.nx; ++i) s += f.at(i, j);
      const double mean = s / g.nx;
      for (int i = 0; i < g.nx; ++i) f.at(i, j) = mean;
    }
  }
  f.clamp_nonnegative();
  f.impose_constraints();
  if (x_constant) {
    // a row with a pinned node can only be constant at the pinned value, so
    // propagate it; this is exactly the projection onto
    // {x-constant} intersect {admissible}
    const Grid& g = f.grid;
    for (int j = 0; j <= g.ny; ++j)
      if (f.mask[g.idx(0, j)]) {
        const double v = f.at(0, j);
        for (int i = 1; i < g.nx; ++i) f.at(i, j) = v;
      }
  }
}

struct StageResult {
  int iters = 0;
  bool hit_tol = false;
};

// One continuation stage of projected BB descent at fixed eps.
inline StageResult descend_stage(Field& u, double eps, double h, double tol,
                                 const MinimizeOptions& opt, int stage) {
  const int n = u.grid.n_nodes();
  std::vector<double> g, g_prev, u_prev(n), trial(n);
  double e = energy_impl(u, eps, h);
  gradient_impl(u, eps, h, g);
  double alpha = 0.0;
  StageResult res;
  for (int iter = 0; iter < opt.max_iter_per_stage; ++iter) {
    const double gmax = projected_residual(u, g);
    if (gmax <= tol) {
      res.hit_tol = true;
      break;
    }
    if (iter == 0 || !(alpha > 0.0) || !std::isfinite(alpha))
      alpha = 0.1 * std::max(u.datum, 1e-300) / gmax;

    u_prev = u.values;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
      for (int k = 0; k < n; ++k) trial[k] = u_prev[k] - alpha * g[k];
      u.values = trial;
      project(u, opt.x_constant);
      double move2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double d = u.values[k] - u_prev[k];
        move2 += d * d;
      }
      if (move2 == 0.0) break;  // projection absorbed the whole step
      const double e_trial = energy_impl(u, eps, h);
      if (e_trial <= e - opt.armijo / alpha * move2) {
        e = e_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      u.values = u_prev;
      break;  // stagnated at this stage
    }
    ++res.iters;

    if (opt.symmetrize_every > 0 && (iter + 1) % opt.symmetrize_every == 0) {
      symmetrize(u);
      project(u, opt.x_constant);
    }
    if (opt.checkpoint_every > 0 && opt.checkpoint_sink &&
        (iter + 1) % opt.checkpoint_every == 0)
      opt.checkpoint_sink(u, stage, iter + 1);

    g_prev.swap(g);
    gradient_impl(u, eps, h, g);
    // BB2 step from the accepted move and the gradient change.
    double sy = 0.0, yy = 0.0;
    for (int k = 0; k < n; ++k) {
      const double s = u.values[k] - u_prev[k];
      const double y = g[k] - g_prev[k];
      sy += s * y;
      yy += y * y;
    }
    alpha = (sy > 0.0 && yy > 0.0) ? sy / yy : 0.0;

    if (opt.observer) opt.observer(stage, iter + 1, e, projected_residual(u, g));
  }
  return res;
}

}  // namespace detail

// Named default starts: the datum-height flat profile, the flat profile at
// the cubic root when it exists, and a symmetric single-bump perturbation of
// the datum profile that pushes mass above gamma.
inline std::vector<std::pair<std::string, Field>> default_starts(
    const Grid& g, const ProblemParams& p) {
  std::vector<std::pair<std::string, Field>> starts;
  starts.emplace_back("flat_gamma", sample_flat(g, p, p.gamma));
  try {
    const double th = flat_height_root(p.m, p.h);
    starts.emplace_back("flat_root", sample_flat(g, p, th));
  } catch (const NoRootError&) {
  }
  const double delta = 0.1 * p.m;
  const double width = 0.5 * p.gamma;
  Field bump = sample(g, p.m, p.gamma, [&](double x, double y) {
    const double base = p.m * std::max(0.0, 1.0 - y / p.gamma);
    const double ring = std::exp(-std::pow((y - p.gamma) / width, 2));
    return base + delta * std::cos(2.0 * std::numbers::pi * x / p.lambda) * ring;
  });
  // mirror the left half so the start is even in x to the bit, not merely up
  // to libm rounding; descent preserves that exactly
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 1; i < g.nx / 2; ++i) bump.at(g.nx - i, j) = bump.at(i, j);
  bump.clamp_nonnegative();
  bump.impose_constraints();
  starts.emplace_back("bump", std::move(bump));
  return starts;
}

inline Solution minimize(const ProblemParams& p, const Grid& g,
                         const SmoothingSchedule& sched,
                         std::vector<std::pair<std::string, Field>> starts,
                         const MinimizeOptions& opt = {}) {
  validate(p);
  if (sched.stages.empty()) throw ConfigError("smoothing", "empty schedule");
  for (std::size_t k = 1; k < sched.stages.size(); ++k)
    if (!(sched.stages[k] < sched.stages[k - 1]))
      throw ConfigError("smoothing", "schedule must be strictly decreasing");
  if (starts.empty()) throw ConfigError("starts", "need at least one start");

  const double tol = opt.tol_grad_scale * p.m / g.dx;
  const double eps_final = sched.final_eps();
  Solution best;
  bool have_best = false;
  for (auto& [name, start] : starts) {
    Field u = start;
    if (opt.x_constant) {
      // an x-constant field can only satisfy a pinned seam node by vanishing
      // on the whole row, so those rows are constrained, not free
      for (int j = 0; j <= g.ny; ++j)
        if (u.mask[g.idx(0, j)])
          for (int i = 1; i < g.nx; ++i) u.mask[g.idx(i, j)] = 1;
    }
    detail::project(u, opt.x_constant);
    int iters = 0;
    bool hit = false;
    for (std::size_t s = 0; s < sched.stages.size(); ++s) {
      const auto r = detail::descend_stage(u, sched.stages[s], p.h, tol, opt, (int)s);
      iters += r.iters;
      hit = r.hit_tol;
    }
    const double e = detail::energy_impl(u, eps_final, p.h);
    if (!have_best || e < best.energy) {
      have_best = true;
      best.field = std::move(u);
      best.energy = e;
      best.iterations = iters;
      best.converged = hit;
      best.best_start = name;
    }
  }
  best.params = p;
  best.eps_final = eps_final;
  best.energy_sharp = detail::energy_sharp_impl(best.field, p.h);
  best.starts_used = (int)starts.size();
  {
    std::vector<double> gr;
    detail::gradient_impl(best.field, eps_final, p.h, gr);
    best.grad_norm = detail::projected_residual(best.field, gr);
  }
  return best;
}

}  // namespace fbstrip

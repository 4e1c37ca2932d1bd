#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbstrip/free_boundary.hpp"

using namespace fbstrip;
using Catch::Approx;

namespace {

// u > 0 exactly on |x| < -G(y), linear with slope `slope` in |x|; the extraction
// target on the left half is x = G(y) (with the documented threshold bias).
Field banded_field(const Grid& g, double datum, double gamma,
                   const std::vector<double>& G, double slope) {
  Field f = make_field(g, datum, gamma);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (f.mask[g.idx(i, j)]) continue;
      const double ax = std::abs(g.x(i));
      f.at(i, j) = std::max(0.0, slope * (-G[j] - ax));
    }
  return f;
}

Solution wrap_solution(Field f, const ProblemParams& p, double eps_final) {
  Solution s;
  s.field = std::move(f);
  s.params = p;
  s.eps_final = eps_final;
  return s;
}

}  // namespace

TEST_CASE("extraction sentinels on x-constant fields", "[fbcurve]") {
  const ProblemParams p{2.0, 3.0, 2.0, 1.0};
  const Grid g = build_grid(p, 64, 70, 3.5);

  // flat ramp of height 2: positive below, zero above
  const Field f = sample_flat(g, p, 2.0);
  const FBCurve c = extract_graph(f, 0.01);
  for (int j = 0; j <= g.ny; ++j) {
    if (f.at(0, j) > 0.01) {
      CHECK(c.flags[j] == RowFlag::AllPositive);
      CHECK(c.gs[j] == -0.5);
    } else {
      CHECK(c.flags[j] == RowFlag::AllZero);
    }
  }
  CHECK(c.n_defined() == 0);
  CHECK(oscillation(c) == 0.0);  // all-sentinel convention
  CHECK(c.asymmetric_rows == 0);

  // half-plane ramp recentred at gamma: positive strictly below gamma
  const ProblemParams q{1.0, 3.0, 1.5, 1.0};
  const Grid g2 = build_grid(q, 32, 40, 4.0);
  const Field w = sample(g2, q.m, q.gamma, [&](double, double y) {
    return (q.h - q.gamma) * std::max(q.gamma - y, 0.0);
  });
  const FBCurve c2 = extract_graph(w, 1e-6);
  for (int j = 0; j <= g2.ny; ++j) {
    if (w.at(0, j) > 1e-6)
      CHECK(c2.flags[j] == RowFlag::AllPositive);
    else
      CHECK(c2.flags[j] == RowFlag::AllZero);
  }
}

TEST_CASE("extraction recovers a synthetic band", "[fbcurve]") {
  const ProblemParams p{1.0, 3.0, 0.4, 1.0};
  const Grid g = build_grid(p, 128, 64, 3.2);
  std::vector<double> G(g.ny + 1);
  for (int j = 0; j <= g.ny; ++j) G[j] = -0.25 + 0.1 * std::sin(2.0 * g.y(j));
  const double thr = 0.003, slope = 1.0;
  const Field f = banded_field(g, p.m, p.gamma, G, slope);
  const FBCurve c = extract_graph(f, thr);

  int checked = 0;
  for (int j = 1; j < g.ny; ++j) {
    REQUIRE(c.flags[j] == RowFlag::Defined);
    CHECK(c.gs[j] >= -0.5);
    CHECK(c.gs[j] <= 0.0);
    // biased outward by thr/slope, up to one-cell interpolation error
    CHECK(c.gs[j] == Approx(G[j] + thr / slope).margin(g.dx));
    ++checked;
  }
  CHECK(checked > 50);
  CHECK(c.max_jump() < 3.0 * g.dx);

  // raising the threshold never moves g toward the seam
  const FBCurve c2 = extract_graph(f, 4.0 * thr);
  for (int j = 1; j < g.ny; ++j)
    if (c.flags[j] == RowFlag::Defined && c2.flags[j] == RowFlag::Defined)
      CHECK(c2.gs[j] >= c.gs[j] - 1e-15);

  // mirrored extraction from the right half agrees within one cell
  const FBCurve cr = detail::extract_graph_impl(f, thr, true);
  for (int j = 1; j < g.ny; ++j)
    if (c.flags[j] == RowFlag::Defined && cr.flags[j] == RowFlag::Defined)
      CHECK(std::abs(cr.gs[j] - c.gs[j]) <= g.dx);

  CHECK_THROWS_AS(extract_graph(f, -1.0), ConfigError);

  Field fa = f;
  fa.at(10, 5) += 0.5;
  CHECK(extract_graph(fa, thr).asymmetric_rows >= 1);
  CHECK(c.asymmetric_rows == 0);
}

TEST_CASE("oscillation", "[fbcurve]") {
  FBCurve c;
  c.lambda = 1.0;
  for (int k = 0; k <= 40; ++k) {
    const double y = 0.1 * k;
    c.ys.push_back(y);
    c.gs.push_back(-0.25 + 0.1 * std::sin(y));
    c.flags.push_back(RowFlag::Defined);
  }
  double mx = -1e300, mn = 1e300;
  for (double v : c.gs) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  CHECK(oscillation(c) == mx - mn);  // identical arithmetic, exact

  FBCurve single;
  single.ys = {1.0};
  single.gs = {-0.3};
  single.flags = {RowFlag::Defined};
  CHECK_THROWS_AS(oscillation(single), NotDefinedError);

  FBCurve empty;
  CHECK(oscillation(empty) == 0.0);
}

TEST_CASE("bernoulli statistics on a graded band", "[fbcurve]") {
  // |grad u| = slope everywhere inside the band; choosing slope = sqrt(h - y0)
  // makes the residual small near y0 and larger away from it.
  const ProblemParams p{1.0, 3.0, 0.4, 1.0};
  const Grid g = build_grid(p, 256, 128, 3.2);
  const double y0 = 1.0, slope = std::sqrt(p.h - y0);
  std::vector<double> G(g.ny + 1, -0.25);
  const Field f = banded_field(g, p.m, p.gamma, G, slope);
  const Solution sol = wrap_solution(f, p, 0.01);
  const FBCurve c = extract_graph(sol);

  const BernoulliStats st = bernoulli_check(sol, c);
  CHECK(st.n_samples > 40);
  // residual at height y is |slope - sqrt(3-y)|/sqrt(3-y); the median over
  // y in (0,3) stays well under 0.35 for slope = sqrt(2)
  CHECK(st.median < 0.35);
  CHECK(st.p90 >= st.median);

  // sentinel-only curve: nothing to check against
  const Field flat = sample_flat(g, p, 0.4);
  const Solution fsol = wrap_solution(flat, p, 0.01);
  CHECK_THROWS_AS(bernoulli_check(fsol, extract_graph(fsol)), NotDefinedError);
}

TEST_CASE("flat-profile gradient matches the boundary condition at the root",
          "[fbcurve]") {
  // the cubic identity: at t_h the ramp slope m/t_h equals sqrt(h - t_h)
  for (auto [m, h] : {std::pair{2.0, 3.0}, {1.0, 3.0}, {1.3, 2.6}}) {
    const double th = flat_height_root(m, h);
    CHECK(std::abs(m / th - std::sqrt(h - th)) <= 1e-10);
  }
}

TEST_CASE("contact ratios on the square-root cusp", "[contact]") {
  const ProblemParams p{1.0, 1.25, 0.25, 1.0};
  const int depth = 20;
  const double delta = 0.25;
  FBCurve c;
  c.lambda = p.lambda;
  // samples exactly at the dyadic heights the operation probes
  for (int k = depth; k >= 0; --k) {
    const double d = delta * std::ldexp(1.0, -k);
    c.ys.push_back(p.gamma + d);
    c.gs.push_back(-0.5 * p.lambda + std::sqrt(d));
    c.flags.push_back(RowFlag::Defined);
  }
  std::reverse(c.ys.begin(), c.ys.end());
  std::reverse(c.gs.begin(), c.gs.end());

  const ContactReport rep = contact_ratios(c, p, depth, delta);
  CHECK(rep.from_above);
  REQUIRE((int)rep.ratios.size() == depth + 1);
  CHECK(rep.other_side.empty());
  for (int k = 0; k + 1 <= depth; ++k) {
    const double q = rep.ratios[k + 1].second / rep.ratios[k].second;
    CHECK(std::abs(q - std::sqrt(2.0)) <= 1e-12);
  }
  CHECK(rep.monotone_tail);
  CHECK(rep.max_ratio == rep.ratios.back().second);
}

TEST_CASE("contact ratios on a linear curve", "[contact]") {
  const ProblemParams p{1.0, 1.25, 0.25, 1.0};
  const int depth = 12;
  const double delta = 0.25, alpha = 0.75;
  FBCurve c;
  c.lambda = p.lambda;
  for (int k = depth; k >= 0; --k) {
    const double d = delta * std::ldexp(1.0, -k);
    c.ys.push_back(p.gamma + d);
    c.gs.push_back(-0.5 * p.lambda + alpha * d);
    c.flags.push_back(RowFlag::Defined);
  }
  std::reverse(c.ys.begin(), c.ys.end());
  std::reverse(c.gs.begin(), c.gs.end());

  const ContactReport rep = contact_ratios(c, p, depth, delta);
  for (auto& [y, r] : rep.ratios) CHECK(r == alpha);  // dyadic scaling, exact
  CHECK(!rep.monotone_tail);
  CHECK(rep.max_ratio == alpha);

  FBCurve far;
  far.lambda = p.lambda;
  far.ys = {3.0, 3.1};
  far.gs = {-0.3, -0.3};
  far.flags = {RowFlag::Defined, RowFlag::Defined};
  CHECK_THROWS_AS(contact_ratios(far, p, 4, delta), NotDefinedError);
}

TEST_CASE("contact ratios interpolate between rows and use both sides", "[contact]") {
  const ProblemParams p{1.0, 3.0, 1.0, 1.0};
  FBCurve c;
  c.lambda = 1.0;
  // near-linear curve sampled on an off-dyadic lattice around gamma = 1; the
  // small quadratic term makes the difference quotients strictly decrease
  // toward gamma, so the tail cannot read as increasing
  for (int k = 0; k <= 200; ++k) {
    const double y = 0.3 + 0.007 * k;
    const double d = std::abs(y - p.gamma);
    c.ys.push_back(y);
    c.gs.push_back(-0.5 + 0.2 * d + 1e-3 * d * d);
    c.flags.push_back(RowFlag::Defined);
  }
  const ContactReport rep = contact_ratios(c, p, 6, 0.4);
  CHECK(rep.ratios.size() >= 5);
  CHECK(!rep.other_side.empty());
  for (auto& [y, r] : rep.ratios) CHECK(r == Approx(0.2).margin(1e-3));
  for (auto& [y, r] : rep.other_side) CHECK(r == Approx(0.2).margin(1e-3));
  CHECK(!rep.monotone_tail);
}

TEST_CASE("point evaluation and blow-up view", "[evaluate]") {
  const ProblemParams p{1.0, 3.0, 0.5, 1.0};
  const Grid g = build_grid(p, 32, 32, 3.2);
  // bilinear interpolation reproduces an affine-in-x,y field exactly away
  // from the constrained rows
  Field f = make_field(g, p);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.at(i, j) = 2.0 + 0.25 * g.x(i) + 0.5 * g.y(j);
  const GridEvaluator ev(f, 0.0);
  // stay off the wrap cell [x_{nx-1}, x_0 + lambda): the test field is affine,
  // not periodic, so interpolation across the seam sees its jump
  for (double x : {-0.47, -0.2, 0.11, 0.43})
    for (double y : {0.31, 1.7, 2.9}) {
      const PointSample s = ev.at(x, y);
      CHECK(s.u == Approx(2.0 + 0.25 * x + 0.5 * y).epsilon(1e-12));
      CHECK(s.grad.x == Approx(0.25).epsilon(1e-12));
      CHECK(s.grad.y == Approx(0.5).epsilon(1e-12));
    }
  // periodic wrap: x past the seam folds back
  CHECK(ev.at(-0.5 - 0.1, 1.0).u == Approx(ev.at(0.5 - 0.1, 1.0).u).epsilon(1e-12));
  CHECK_THROWS_AS(ev.at(0.0, -0.5), ConfigError);
  CHECK_THROWS_AS(ev.at(0.0, 99.0), ConfigError);

  const BlowupView bv(ev, Vec2{-0.5, 0.5}, 0.1);
  const PointSample b = bv.at(1.0, -1.0);  // maps to (-0.4, 0.4)
  const PointSample o = ev.at(-0.4, 0.4);
  CHECK(b.u == Approx(o.u / 0.1).epsilon(1e-12));
  CHECK(b.grad.x == o.grad.x);
  CHECK(b.grad.y == o.grad.y);

  const AnalyticProfile hp = halfplane_profile(2.0);
  CHECK(hp.at(0.3, -0.5).u == 1.0);
  CHECK(hp.at(0.3, -0.5).grad.y == -2.0);
  CHECK(hp.at(0.3, 0.5).u == 0.0);
  CHECK(norm(hp.at(0.3, 0.5).grad) == 0.0);
}

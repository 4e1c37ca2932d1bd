#pragma once

// Free-boundary graph extraction and its diagnostics.
//
// For a symmetric minimizer the positivity set in the left half-period is
// bounded by a graph x = g(y), g(y) in [-lambda/2, 0]: per grid row, g is
// where u first exceeds the positivity threshold when scanning from the seam
// toward the center, refined by linear interpolation between the bracketing
// nodes.  Rows positive already at the seam carry the AllPositive sentinel
// (g = -lambda/2), rows never exceeding the threshold carry AllZero.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "fbstrip/evaluate.hpp"
#include "fbstrip/minimize.hpp"

namespace fbstrip {

enum class RowFlag { Defined, AllZero, AllPositive };

inline const char* to_string(RowFlag f) {
  switch (f) {
    case RowFlag::Defined: return "defined";
    case RowFlag::AllZero: return "all_zero";
    case RowFlag::AllPositive: return "all_positive";
  }
  return "?";
}

struct FBCurve {
  std::vector<double> ys;
  std::vector<double> gs;  // NaN on AllZero rows, -lambda/2 on AllPositive rows
  std::vector<RowFlag> flags;
  double threshold = 0.0;
  double lambda = 0.0;
  int asymmetric_rows = 0;  // rows whose mirror mismatch exceeds 1e-9

  int n_defined() const {
    int n = 0;
    for (RowFlag f : flags) n += (f == RowFlag::Defined);
    return n;
  }

  // Largest |g| difference between consecutive defined rows; the continuity
  // surrogate reported alongside the curve, never assumed.
  double max_jump() const {
    double worst = 0.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < flags.size(); ++k) {
      if (flags[k] != RowFlag::Defined) continue;
      if (!std::isnan(prev)) worst = std::max(worst, std::abs(gs[k] - prev));
      prev = gs[k];
    }
    return worst;
  }
};

namespace detail {

inline FBCurve extract_graph_impl(const Field& f, double thr, bool from_right) {
  const Grid& g = f.grid;
  const int half = g.nx / 2;
  FBCurve c;
  c.threshold = thr;
  c.lambda = g.lambda;
  c.ys.resize(g.ny + 1);
  c.gs.resize(g.ny + 1);
  c.flags.resize(g.ny + 1);
  // scanning from the right seam toward the center visits column nx - k
  // where the left scan visits k
  auto col = [&](int k) { return from_right ? (k == 0 ? 0 : g.nx - k) : k; };
  for (int j = 0; j <= g.ny; ++j) {
    c.ys[j] = g.y(j);
    double mismatch = 0.0;
    for (int i = 1; i < half; ++i)
      mismatch = std::max(mismatch, std::abs(f.at(i, j) - f.at(g.nx - i, j)));
    if (mismatch > 1e-9) ++c.asymmetric_rows;

    if (f.at(col(0), j) > thr) {
      c.flags[j] = RowFlag::AllPositive;
      c.gs[j] = -0.5 * g.lambda;
      continue;
    }
    int hit = -1;
    for (int k = 1; k <= half; ++k)
      if (f.at(col(k), j) > thr) {
        hit = k;
        break;
      }
    if (hit < 0) {
      c.flags[j] = RowFlag::AllZero;
      c.gs[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double lo = f.at(col(hit - 1), j), hi = f.at(col(hit), j);
    const double frac = (thr - lo) / (hi - lo);
    c.flags[j] = RowFlag::Defined;
    c.gs[j] = -0.5 * g.lambda + (hit - 1 + frac) * g.dx;
  }
  return c;
}

}  // namespace detail

inline FBCurve extract_graph(const Field& f, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold))
    throw ConfigError("fbcurve.threshold", "must be finite and >= 0");
  return detail::extract_graph_impl(f, threshold, false);
}

// Default threshold: half the final indicator width of the solve.
inline FBCurve extract_graph(const Solution& sol, double threshold = -1.0) {
  if (threshold < 0.0) threshold = 0.5 * sol.eps_final;
  return extract_graph(sol.field, threshold);
}

// Nonflatness measure: max g - min g over defined rows.  All-sentinel curves
// report 0 by convention; a single defined sample has no oscillation.
inline double oscillation(const FBCurve& c) {
  const int n = c.n_defined();
  if (n == 0) return 0.0;
  if (n == 1) throw NotDefinedError("oscillation: single defined sample");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < c.flags.size(); ++k)
    if (c.flags[k] == RowFlag::Defined) {
      lo = std::min(lo, c.gs[k]);
      hi = std::max(hi, c.gs[k]);
    }
  return hi - lo;
}

struct BernoulliStats {
  double median = 0.0;
  double p90 = 0.0;
  int n_samples = 0;
};

// Compares the one-sided gradient magnitude along the extracted boundary
// against sqrt(h - y).  The gradient is sampled a fixed offset inside the
// positivity region along the curve normal; g is smoothed over three
// neighboring defined rows before differentiating, raw g is staircase-noisy.
inline BernoulliStats bernoulli_check(const Solution& sol, const FBCurve& c) {
  const Grid& grid = sol.field.grid;
  const double h = sol.params.h;
  const double delta = 2.0 * grid.dx;
  const GridEvaluator ev(sol.field, c.threshold);

  const int n = (int)c.ys.size();
  auto defined = [&](int k) { return k >= 0 && k < n && c.flags[k] == RowFlag::Defined; };
  auto smooth_g = [&](int k) -> double {
    double s = c.gs[k];
    int cnt = 1;
    if (defined(k - 1)) s += c.gs[k - 1], ++cnt;
    if (defined(k + 1)) s += c.gs[k + 1], ++cnt;
    return s / cnt;
  };

  std::vector<double> residuals;
  for (int k = 0; k < n; ++k) {
    if (!defined(k) || !defined(k - 1) || !defined(k + 1)) continue;
    const double y = c.ys[k];
    if (!(y < h)) continue;
    const double target = std::sqrt(h - y);
    if (!(target > 0.0)) continue;
    const double gp = (smooth_g(k + 1) - smooth_g(k - 1)) / (c.ys[k + 1] - c.ys[k - 1]);
    const double nrm = std::sqrt(1.0 + gp * gp);
    const double px = c.gs[k] + delta / nrm;
    const double py = y - delta * gp / nrm;
    if (!(py > 0.0 && py < grid.y_max)) continue;
    const double mag = norm(ev.at(px, py).grad);
    residuals.push_back(std::abs(mag - target) / target);
  }
  if (residuals.empty())
    throw NotDefinedError("bernoulli_check: no usable defined band");
  std::sort(residuals.begin(), residuals.end());
  BernoulliStats st;
  st.n_samples = (int)residuals.size();
  st.median = residuals[residuals.size() / 2];
  st.p90 = residuals[(std::size_t)((residuals.size() - 1) * 0.9)];
  return st;
}

struct ContactReport {
  // primary approach side, ordered toward gamma (k = 0..depth)
  std::vector<std::pair<double, double>> ratios;     // (y_k, r_k)
  std::vector<std::pair<double, double>> other_side;
  bool from_above = true;
  bool monotone_tail = false;
  double max_ratio = 0.0;
};

namespace detail {

// g at an off-sample height: exact hit on a usable row wins, otherwise
// linear interpolation between the bracketing rows when both are usable.
// AllPositive rows count as g = -lambda/2; AllZero rows are unusable.
inline std::optional<double> curve_value(const FBCurve& c, double y) {
  const int n = (int)c.ys.size();
  auto usable = [&](int k) { return c.flags[k] != RowFlag::AllZero; };
  for (int k = 0; k < n; ++k)
    if (c.ys[k] == y && usable(k)) return c.gs[k];
  for (int k = 0; k + 1 < n; ++k) {
    if (!(c.ys[k] < y && y < c.ys[k + 1])) continue;
    if (!usable(k) || !usable(k + 1)) return std::nullopt;
    const double w = (y - c.ys[k]) / (c.ys[k + 1] - c.ys[k]);
    return c.gs[k] + w * (c.gs[k + 1] - c.gs[k]);
  }
  return std::nullopt;
}

}  // namespace detail

// Difference quotients |g(y_k) - g(gamma)| / |y_k - gamma| on the dyadic
// approach y_k = gamma +- delta 2^{-k}, with g(gamma) := -lambda/2 (the
// contact-point normalization).  A divergent quotient is the horizontal
// tangent signature; a bounded one is the finite-slope behavior.
inline ContactReport contact_ratios(const FBCurve& c, const ProblemParams& p,
                                    int depth, double delta = -1.0) {
  validate(p);
  if (depth < 0) throw ConfigError("contact.depth", "must be >= 0");
  if (delta <= 0.0)
    delta = 0.5 * (p.h > p.gamma ? std::min(p.gamma, p.h - p.gamma) : p.gamma);
  auto side = [&](double sign) {
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k <= depth; ++k) {
      const double d = delta * std::ldexp(1.0, -k);
      const double y = p.gamma + sign * d;
      if (y <= 0.0) continue;
      const auto gv = detail::curve_value(c, y);
      if (!gv) continue;
      out.emplace_back(y, (*gv + 0.5 * c.lambda) / d);
    }
    return out;
  };
  auto above = side(1.0), below = side(-1.0);
  if (above.empty() && below.empty())
    throw NotDefinedError("contact_ratios: curve undefined near gamma");

  ContactReport rep;
  rep.from_above = above.size() >= below.size();
  rep.ratios = rep.from_above ? std::move(above) : std::move(below);
  rep.other_side = rep.from_above ? std::move(below) : std::move(above);
  const std::size_t m = rep.ratios.size();
  rep.monotone_tail = m >= 3 && rep.ratios[m - 2].second > rep.ratios[m - 3].second &&
                      rep.ratios[m - 1].second > rep.ratios[m - 2].second;
  for (auto& [y, r] : rep.ratios) rep.max_ratio = std::max(rep.max_ratio, r);
  for (auto& [y, r] : rep.other_side) rep.max_ratio = std::max(rep.max_ratio, r);
  return rep;
}

}  // namespace fbstrip

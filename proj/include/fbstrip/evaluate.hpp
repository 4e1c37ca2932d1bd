#pragma once

// Point evaluation of nodal fields between nodes.
//
// Bilinear interpolation on the cell containing the point; x wraps
// periodically.  For symmetric (even-in-x) fields the periodic wrap is
// identical to the even reflection across the seam x = -lambda/2, which is
// the extension the ball integrals around the contact point need.

#include <cmath>
#include <functional>

#include "fbstrip/grid.hpp"

namespace fbstrip {

struct PointSample {
  double u = 0.0;
  Vec2 grad;
};

class GridEvaluator {
 public:
  GridEvaluator(const Field& f, double chi_threshold)
      : f_(&f), chi_thr_(chi_threshold) {}

  double chi_threshold() const { return chi_thr_; }
  const Field& field() const { return *f_; }

  PointSample at(double x, double y) const {
    const Grid& g = f_->grid;
    if (!(y >= 0.0 && y <= g.y_max))
      throw ConfigError("evaluate.y", "point outside [0, y_max]");
    const double a = (x + 0.5 * g.lambda) / g.dx;
    const double af = std::floor(a);
    const double fx = a - af;
    const long iw = ((long)af % g.nx + g.nx) % g.nx;
    const int i0 = (int)iw;
    const int i1 = (i0 + 1 == g.nx) ? 0 : i0 + 1;
    const double b = y / g.dy;
    int j0 = (int)std::floor(b);
    if (j0 > g.ny - 1) j0 = g.ny - 1;
    if (j0 < 0) j0 = 0;
    const double fy = b - j0;
    const double u00 = f_->at(i0, j0), u10 = f_->at(i1, j0);
    const double u01 = f_->at(i0, j0 + 1), u11 = f_->at(i1, j0 + 1);
    PointSample s;
    s.u = (1.0 - fy) * ((1.0 - fx) * u00 + fx * u10) +
          fy * ((1.0 - fx) * u01 + fx * u11);
    s.grad.x = ((u10 - u00) * (1.0 - fy) + (u11 - u01) * fy) / g.dx;
    s.grad.y = ((u01 - u00) * (1.0 - fx) + (u11 - u10) * fx) / g.dy;
    return s;
  }

 private:
  const Field* f_;
  double chi_thr_;
};

// Closed-form profile plugged into the same diagnostics; chi threshold 0
// (the exact positivity set).
struct AnalyticProfile {
  std::function<double(double, double)> value;
  std::function<Vec2(double, double)> gradient;
  double chi_thr = 0.0;

  double chi_threshold() const { return chi_thr; }
  PointSample at(double x, double y) const { return {value(x, y), gradient(x, y)}; }
};

// w(s, t) = c (-t)_+ in blow-up coordinates about the origin.
inline AnalyticProfile halfplane_profile(double c) {
  AnalyticProfile p;
  p.value = [c](double, double t) { return c * std::max(-t, 0.0); };
  p.gradient = [c](double, double t) {
    return t < 0.0 ? Vec2{0.0, -c} : Vec2{0.0, 0.0};
  };
  return p;
}

// Rescaled view u_n(z) = u(x0 + rho z)/rho without resampling; gradients are
// scale-invariant under this rescaling.
template <class Ev>
class BlowupView {
 public:
  BlowupView(const Ev& ev, Vec2 x0, double rho) : ev_(&ev), x0_(x0), rho_(rho) {
    if (!(rho > 0.0)) throw ConfigError("blowup.rho", "must be > 0");
  }

  double chi_threshold() const { return ev_->chi_threshold() / rho_; }
  PointSample at(double s, double t) const {
    PointSample p = ev_->at(x0_.x + rho_ * s, x0_.y + rho_ * t);
    p.u /= rho_;
    return p;
  }

 private:
  const Ev* ev_;
  Vec2 x0_;
  double rho_;
};

}  // namespace fbstrip

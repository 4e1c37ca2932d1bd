#pragma once

#include <string>

#include "fbstrip/common.hpp"

namespace fbstrip {

// Physical data of the periodic strip problem: boundary mass m, height
// parameter h of the weight (h - y)_+, pinning height gamma of the side
// condition, and period lambda.
struct ProblemParams {
  double m = 1.0;
  double h = 1.0;
  double gamma = 0.5;
  double lambda = 1.0;
};

inline void validate(const ProblemParams& p, const std::string& prefix = "params") {
  auto need = [&](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(prefix + "." + field, msg);
  };
  need(std::isfinite(p.m) && p.m > 0.0, "m", "must be finite and > 0");
  need(std::isfinite(p.h) && p.h > 0.0, "h", "must be finite and > 0");
  need(std::isfinite(p.gamma) && p.gamma > 0.0, "gamma", "must be finite and > 0");
  need(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda", "must be finite and > 0");
}

// Several diagnostics are meaningful only when the pinning height sits below
// the weight height; they call this instead of assuming it.
inline void require_gamma_below_h(const ProblemParams& p, const char* op) {
  if (!(p.gamma < p.h))
    throw ConfigError(std::string(op) + ": params.gamma", "requires gamma < h");
}

}  // namespace fbstrip

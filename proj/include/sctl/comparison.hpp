#pragma once

#include "sctl/constants.hpp"

namespace sctl {

// Comparison functions of the Gronwall argument.
//
//   Phi(x) = x (c - ln x)^2          for x <= x0,
//            Phi(x0) + c^2 (x - x0)  for x > x0;
// concave, increasing, with matching one-sided derivatives at x0 (the
// tangent-line extension: (c - ln x0)^2 - 2(c - ln x0) = c^2).
double phi(const BoundConstants& bc, double x);

// Psi(y) = sqrt(Phi(e^{-y}) e^{y}); equals c + y for y >= y0 = -ln x0.
double psi(const BoundConstants& bc, double y);

// ell(q) = C_inf (1 + 2 sqrt(Phi(q)/q)); decreasing, convex, with limit
// C_inf (1 + 2c) as q -> infinity.
double ell(const BoundConstants& bc, double q, double C_inf);

}  // namespace sctl

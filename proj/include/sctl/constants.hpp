#pragma once

namespace sctl {

// The explicit constants of the log-Lipschitz Coulomb estimate and the
// Gronwall comparison argument.
//
//   theta1 = (3 - sqrt(5))/2
//   theta2 solves theta^2 = (1 - theta)^3
//   c      = 2/3 + (sqrt(5) - theta2)/2          (c < 1.57)
//   c2     = c + 1/2                              (c2 < 2.07)
//   ln x0  = c - 1 - sqrt(1 + c^2)                (x0 in (0.27, 0.28))
//   y0     = 1 + sqrt(1 + c^2) - c = -ln x0       (y0 < 1.3)
//   R^3    = 3*|kappa|*||rho||_1 / (8*pi*theta1^3*C_inf)
//
// y0 is stored as -ln x0; the source's printed expression c - 1 - sqrt(1+c^2)
// is its negative and is inconsistent with Psi(y) = c + y for y >= y0 (see
// the erratum note in the repository docs).
struct BoundConstants {
    double theta1;
    double theta2;
    double c;
    double c2;
    double y0;
    double x0;
    double kappa;
    double C_inf_init;
    double R;
};

// theta2 is found by bisection plus Newton polish to 1e-14.  kappa = 0 has
// no interaction length scale; R is set to 1 for scale-free diagnostics.
BoundConstants constants(double kappa, double C_inf = 1.0, double rho_l1 = 1.0);

}  // namespace sctl

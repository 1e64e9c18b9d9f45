#include "sctl/constants.hpp"

#include <cmath>

#include "sctl/errors.hpp"
#include "sctl/grid.hpp"

namespace sctl {

namespace {

double solve_theta2() {
    // theta^2 = (1 - theta)^3 on (0, 1); f is increasing there.
    auto f = [](double t) { return t * t - (1.0 - t) * (1.0 - t) * (1.0 - t); };
    double lo = 0.3, hi = 0.6;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        const double df = 2.0 * t + 3.0 * (1.0 - t) * (1.0 - t);
        t -= f(t) / df;
    }
    return t;
}

}  // namespace

BoundConstants constants(double kappa, double C_inf, double rho_l1) {
    if (!(C_inf > 0.0)) throw InputError("constants: C_inf must be positive");
    if (!(rho_l1 > 0.0)) throw InputError("constants: rho_l1 must be positive");
    BoundConstants bc;
    bc.theta1 = (3.0 - std::sqrt(5.0)) / 2.0;
    bc.theta2 = solve_theta2();
    bc.c = 2.0 / 3.0 + (std::sqrt(5.0) - bc.theta2) / 2.0;
    bc.c2 = bc.c + 0.5;
    const double s = std::sqrt(1.0 + bc.c * bc.c);
    bc.x0 = std::exp(bc.c - 1.0 - s);
    bc.y0 = 1.0 + s - bc.c;
    bc.kappa = kappa;
    bc.C_inf_init = C_inf;
    if (kappa != 0.0) {
        const double r3 = 3.0 * std::abs(kappa) * rho_l1 /
                          (8.0 * kPi * bc.theta1 * bc.theta1 * bc.theta1 * C_inf);
        bc.R = std::cbrt(r3);
    } else {
        bc.R = 1.0;
    }
    return bc;
}

}  // namespace sctl

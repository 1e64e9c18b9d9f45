#include "sctl/comparison.hpp"

#include <cmath>

#include "sctl/errors.hpp"

namespace sctl {

double phi(const BoundConstants& bc, double x) {
    if (!(x > 0.0)) throw InputError("phi: argument must be positive");
    if (x <= bc.x0) {
        const double u = bc.c - std::log(x);
        return x * u * u;
    }
    const double u0 = bc.c - std::log(bc.x0);
    return bc.x0 * u0 * u0 + bc.c * bc.c * (x - bc.x0);
}

double psi(const BoundConstants& bc, double y) {
    const double x = std::exp(-y);
    return std::sqrt(phi(bc, x) * std::exp(y));
}

double ell(const BoundConstants& bc, double q, double C_inf) {
    if (!(q > 0.0)) throw InputError("ell: argument must be positive");
    return C_inf * (1.0 + 2.0 * std::sqrt(phi(bc, q) / q));
}

}  // namespace sctl

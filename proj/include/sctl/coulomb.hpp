#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sctl/certificate.hpp"
#include "sctl/constants.hpp"

namespace sctl {

// Elementary Coulomb-difference inequality
//   | x/|x|^3 - y/|y|^3 | <= (|y-x| / (|x||y|)) (1/|x| + 1/|y|)
// for x, y in R^3 \ {0}.  Both sides in extended precision; the certificate
// records the LHS/RHS ratio and passes at 1e-12 relative tolerance
// (aligned points achieve equality).
Certificate coulomb_elementary(const Eigen::Vector3d& x, const Eigen::Vector3d& y);

// Test corpus for the force-field certificates: mixtures of uniform balls
// and isotropic Gaussians in R^3, with closed-form fields via the enclosed
// mass (shell theorem for balls, erf profile for Gaussians).
struct RadialComponent {
    enum class Kind { Ball, Gaussian };
    Kind kind;
    Eigen::Vector3d center;
    double param;  // ball radius / gaussian sigma
    double mass;
};

struct DensityModel {
    std::vector<RadialComponent> comps;

    double l1_mass() const;
    double value(const Eigen::Vector3d& w) const;
    // Numerical sup of the density (multistart local ascent from component
    // centers); recorded as measured data.
    double sup_norm() const;
    // F(x) = integral (x - w)/|x - w|^3 rho(w) dw, closed form.
    Eigen::Vector3d field(const Eigen::Vector3d& x) const;
    // Radius beyond which all components are negligible around `x`.
    double support_radius(const Eigen::Vector3d& x) const;
};

DensityModel random_corpus_density(std::uint64_t seed, std::uint64_t index);

// Adaptive spherical-shell quadrature of the same field:
// F(x) = -int_0^R int_{S^2} omega rho(x + r omega) domega dr.  The 1/r^2
// singularity cancels against the volume element, so the integrand is
// smooth; panels split until the embedded GL7/GL15 estimate certifies
// `rel_tol`.
struct QuadratureField {
    Eigen::Vector3d value;
    double error_estimate;
    int panels;
};
QuadratureField coulomb_field_quadrature(const DensityModel& rho, const Eigen::Vector3d& x,
                                         double rel_tol = 1e-8, int max_panels = 4000,
                                         int sphere_order = 12);

// Log-Lipschitz force certificate (unit coupling):
//   |F(x) - F(y)| <= 8*pi*||rho||_inf |x-y| (c + ln_+(R^2/|x-y|^2)),
//   R^3 = 3 ||rho||_1 / (8*pi*theta1^3*||rho||_inf).
// With `use_quadrature`, the LHS carries the quadrature error estimate; if
// it exceeds 1% of the margin the certificate is inconclusive and a single
// refinement level is attempted.
Certificate loglip_field_certificate(const DensityModel& rho, const Eigen::Vector3d& x,
                                     const Eigen::Vector3d& y, bool use_quadrature = true,
                                     std::uint64_t seed = 0);

// Integrated form over a discrete coupling gamma = {(x_i, y_j, m_ij)}:
//   sum m_ij |F(x_i) - F(y_j)|^2 <= (2 C_inf)^2 R^2 Phi(Q_X / R^2),
//   Q_X = sum m_ij |x_i - y_j|^2,  C_inf = ||rho||_inf (unit coupling).
struct CouplingAtom {
    Eigen::Vector3d x;
    Eigen::Vector3d y;
    double mass;
};
Certificate loglip2_integral_certificate(const DensityModel& rho,
                                         const std::vector<CouplingAtom>& gamma,
                                         bool use_quadrature = false, std::uint64_t seed = 0);

}  // namespace sctl

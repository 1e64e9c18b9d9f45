#pragma once

#include "sctl/state.hpp"

namespace sctl {

// Velocity marginal rho_f(x) = integral of f(x, v) dv.
SpatialDensity spatial_density_classical(const PhaseField& f);

// rho(x) = h^d sum_m w_m |psi_m(x)|^2.
SpatialDensity spatial_density_quantum(const MixedState& op);

// Velocity moments: integral |v|^n f for fields, h^d Tr(|p|^n op) for
// states (spectral).  Supported n: 0, 1, 2, 4; n = 0 returns the mass.
double moments(const PhaseField& f, int n);
double moments(const MixedState& op, int n);

// Momentum-space occupation |c_k|^2 of a state vector, normalized so the sum
// equals the L^2 norm squared; shared by moments and the aliasing guard.
Eigen::ArrayXd momentum_occupation(const SpatialGrid& space, const Eigen::Ref<const Eigen::VectorXcd>& psi);

}  // namespace sctl

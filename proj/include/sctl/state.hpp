#pragma once

#include <Eigen/Dense>
#include <optional>

#include "sctl/grid.hpp"

namespace sctl {

// Planck constant for the stated hbar, h = 2*pi*hbar.  All trace
// normalizations below use h^d with d the spatial dimension (d = 1 for the
// sampled machinery).
inline double planck(double hbar) { return 2.0 * kPi * hbar; }

enum class FieldKind {
    Probability,  // values >= 0, mass 1
    Wigner,       // signed allowed, mass 1
};

// Real function on the phase-space grid; values(a, j) = f(x_a, v_j).
struct PhaseField {
    PhaseGrid grid;
    Eigen::ArrayXXd values;  // nx rows, nv cols
    double mass = 0.0;       // cached cell-sum * cell-volume
    FieldKind kind = FieldKind::Probability;

    double cell_mass(int a, int j) const { return values(a, j) * grid.cell_volume(); }
};

double field_mass(const PhaseGrid& grid, const Eigen::ArrayXXd& values);

// Mass within the outer band (width = box/`band_div` per side) of the
// velocity axis.  Periodic boxes stand in for R^d; states must not touch the
// velocity truncation boundary.
double velocity_margin_mass(const PhaseGrid& grid, const Eigen::ArrayXXd& values);

// The velocity box truncates R^d; freshly constructed states must keep their
// mass out of the outer margin band.  Transform outputs (mollifications,
// Wigner functions) may legitimately carry harmless band tails and skip the
// check.
enum class MarginPolicy { Enforce, Ignore };

// Checked constructors.  `make_probability_field` enforces nonnegativity
// (>= -1e-14, clamped), unit mass to 1e-12, and the velocity margin < 1e-10.
// `make_wigner_field` allows signed values and checks mass to 1e-10 only.
PhaseField make_probability_field(const PhaseGrid& grid, Eigen::ArrayXXd values,
                                  MarginPolicy margin = MarginPolicy::Enforce);
PhaseField make_wigner_field(const PhaseGrid& grid, Eigen::ArrayXXd values);

// Normalize values to unit mass, then validate as a probability field.
PhaseField make_normalized_field(const PhaseGrid& grid, Eigen::ArrayXXd values,
                                 MarginPolicy margin = MarginPolicy::Enforce);

// Position density on the spatial grid.
struct SpatialDensity {
    SpatialGrid grid;
    Eigen::ArrayXd values;
    double mass = 0.0;
};

SpatialDensity make_spatial_density(const SpatialGrid& grid, Eigen::ArrayXd values);

// Low-rank density operator: op = sum_m w_m |psi_m><psi_m| with
// h^d * sum w_m = 1 and psi_m orthonormal in the dx-weighted inner product.
// Never materialized densely except inside small-instance solvers.
struct MixedState {
    double hbar = 0.0;
    SpatialGrid space;
    Eigen::VectorXd weights;   // rank entries
    Eigen::MatrixXcd vectors;  // nx x rank

    int rank() const { return static_cast<int>(weights.size()); }
    double h() const { return planck(hbar); }
    // h^d * trace, which the normalization pins to 1.
    double scaled_trace() const { return h() * weights.sum(); }
};

// Validates weights >= 0, orthonormality to 1e-10, h^d trace = 1 to 1e-10.
MixedState make_mixed_state(double hbar, const SpatialGrid& space, Eigen::VectorXd weights,
                            Eigen::MatrixXcd vectors);

void validate_mixed_state(const MixedState& op, double tol = 1e-10);

// Dense integral kernel k(a, b) = op(x_a, x_b) on the spatial grid.
// Operator application is (op psi)(x_a) = sum_b k(a,b) psi(x_b) dx.
struct OperatorKernel {
    double hbar = 0.0;
    SpatialGrid space;
    Eigen::MatrixXcd k;

    double h() const { return planck(hbar); }
    double scaled_trace() const { return h() * k.diagonal().real().sum() * space.dx(); }
    double hermiticity_defect() const { return (k - k.adjoint()).norm() / std::max(1.0, k.norm()); }
};

OperatorKernel to_kernel(const MixedState& op);

// Eigendecompose a Hermitian kernel into a MixedState, dropping eigenvalues
// below `drop_tol` (relative).  Eigenvalues below -psd_tol (absolute, after
// h^d scaling) are an error.
MixedState to_mixed_state(const OperatorKernel& kernel, double psd_tol = 1e-10,
                          double drop_tol = 1e-14);

// Scaled Hilbert-Schmidt norm ||op||_{L^2} = sqrt(h^d Tr(op^2)) of a kernel.
double scaled_hs_norm(const OperatorKernel& kernel);
double scaled_hs_distance(const OperatorKernel& a, const OperatorKernel& b);

}  // namespace sctl

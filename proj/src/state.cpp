#include "sctl/state.hpp"

#include <cmath>
#include <string>

namespace sctl {

double field_mass(const PhaseGrid& grid, const Eigen::ArrayXXd& values) {
    return values.sum() * grid.cell_volume();
}

double velocity_margin_mass(const PhaseGrid& grid, const Eigen::ArrayXXd& values) {
    const int band = std::max(1, grid.nv / 16);
    double m = 0.0;
    for (int j = 0; j < grid.nv; ++j) {
        if (j >= band && j < grid.nv - band) continue;
        m += values.col(j).abs().sum();
    }
    return m * grid.cell_volume();
}

namespace {

void check_finite(const Eigen::ArrayXXd& values, const char* who) {
    if (!values.isFinite().all()) throw InputError(std::string(who) + ": non-finite values");
}

}  // namespace

PhaseField make_probability_field(const PhaseGrid& grid, Eigen::ArrayXXd values, MarginPolicy margin) {
    if (values.rows() != grid.nx() || values.cols() != grid.nv)
        throw InputError("PhaseField: value array does not match grid");
    check_finite(values, "PhaseField");
    if ((values < -1e-14).any()) throw InputError("PhaseField: negative values in probability field");
    values = values.max(0.0);
    const double m = field_mass(grid, values);
    if (std::abs(m - 1.0) > 1e-12)
        throw InputError("PhaseField: probability mass " + std::to_string(m) + " != 1");
    if (margin == MarginPolicy::Enforce && velocity_margin_mass(grid, values) > 1e-10)
        throw InputError("PhaseField: mass in velocity margin band exceeds 1e-10");
    return PhaseField{grid, std::move(values), m, FieldKind::Probability};
}

PhaseField make_wigner_field(const PhaseGrid& grid, Eigen::ArrayXXd values) {
    if (values.rows() != grid.nx() || values.cols() != grid.nv)
        throw InputError("PhaseField: value array does not match grid");
    check_finite(values, "PhaseField");
    const double m = field_mass(grid, values);
    if (std::abs(m - 1.0) > 1e-10)
        throw InputError("PhaseField: Wigner-type mass " + std::to_string(m) + " != 1");
    return PhaseField{grid, std::move(values), m, FieldKind::Wigner};
}

PhaseField make_normalized_field(const PhaseGrid& grid, Eigen::ArrayXXd values, MarginPolicy margin) {
    check_finite(values, "PhaseField");
    const double m = field_mass(grid, values);
    if (!(m > 0.0)) throw InputError("PhaseField: cannot normalize zero/negative mass");
    return make_probability_field(grid, values / m, margin);
}

SpatialDensity make_spatial_density(const SpatialGrid& grid, Eigen::ArrayXd values) {
    if (values.size() != grid.nx) throw InputError("SpatialDensity: size mismatch");
    if (!values.isFinite().all()) throw InputError("SpatialDensity: non-finite values");
    if ((values < -1e-14).any()) throw InputError("SpatialDensity: negative values");
    values = values.max(0.0);
    const double m = values.sum() * grid.dx();
    if (std::abs(m - 1.0) > 1e-10)
        throw InputError("SpatialDensity: mass " + std::to_string(m) + " != 1");
    return SpatialDensity{grid, std::move(values), m};
}

MixedState make_mixed_state(double hbar, const SpatialGrid& space, Eigen::VectorXd weights,
                            Eigen::MatrixXcd vectors) {
    MixedState op;
    op.hbar = hbar;
    op.space = space;
    op.weights = std::move(weights);
    op.vectors = std::move(vectors);
    validate_mixed_state(op);
    return op;
}

void validate_mixed_state(const MixedState& op, double tol) {
    if (!(op.hbar > 0.0)) throw InputError("MixedState: hbar must be positive");
    if (op.vectors.rows() != op.space.nx || op.vectors.cols() != op.weights.size())
        throw InputError("MixedState: shape mismatch");
    if ((op.weights.array() < 0.0).any()) throw InputError("MixedState: negative weight");
    const double tr = op.scaled_trace();
    if (std::abs(tr - 1.0) > tol)
        throw InputError("MixedState: h^d trace = " + std::to_string(tr) + " != 1");
    // Orthonormality in the dx inner product: dx * V^H V = I.
    Eigen::MatrixXcd gram = op.vectors.adjoint() * op.vectors * op.space.dx();
    gram -= Eigen::MatrixXcd::Identity(op.rank(), op.rank());
    const double defect = gram.cwiseAbs().maxCoeff();
    if (defect > tol)
        throw InputError("MixedState: orthonormality defect " + std::to_string(defect));
}

OperatorKernel to_kernel(const MixedState& op) {
    OperatorKernel k;
    k.hbar = op.hbar;
    k.space = op.space;
    k.k = op.vectors * op.weights.asDiagonal() * op.vectors.adjoint();
    return k;
}

MixedState to_mixed_state(const OperatorKernel& kernel, double psd_tol, double drop_tol) {
    const int n = kernel.space.nx;
    if (kernel.k.rows() != n || kernel.k.cols() != n) throw InputError("OperatorKernel: shape mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (kernel.k + kernel.k.adjoint()));
    const double dx = kernel.space.dx();
    const double h = kernel.h();
    // l2 eigenvalue mu -> kernel weight w = mu * dx.
    Eigen::VectorXd w_all = es.eigenvalues() * dx;
    const double wmax = w_all.maxCoeff();
    if (w_all.minCoeff() * h < -psd_tol)
        throw InputError("OperatorKernel: not positive semidefinite (min scaled eigenvalue " +
                         std::to_string(w_all.minCoeff() * h) + ")");
    int r = 0;
    for (int i = 0; i < n; ++i)
        if (w_all[i] > drop_tol * wmax) ++r;
    Eigen::VectorXd w(r);
    Eigen::MatrixXcd v(n, r);
    int c = 0;
    for (int i = 0; i < n; ++i) {
        if (w_all[i] > drop_tol * wmax) {
            w[c] = w_all[i];
            v.col(c) = es.eigenvectors().col(i) / std::sqrt(dx);
            ++c;
        }
    }
    // Renormalize the dropped tail so h^d trace is exactly 1 as stored.
    const double tr = h * w.sum();
    if (std::abs(tr - 1.0) > 1e-6)
        throw InputError("OperatorKernel: scaled trace " + std::to_string(tr) + " too far from 1");
    w /= tr;
    return make_mixed_state(kernel.hbar, kernel.space, std::move(w), std::move(v));
}

double scaled_hs_norm(const OperatorKernel& kernel) {
    const double dx = kernel.space.dx();
    return std::sqrt(kernel.h() * kernel.k.squaredNorm() * dx * dx);
}

double scaled_hs_distance(const OperatorKernel& a, const OperatorKernel& b) {
    if (!(a.space == b.space)) throw InputError("scaled_hs_distance: grid mismatch");
    const double dx = a.space.dx();
    return std::sqrt(a.h() * (a.k - b.k).squaredNorm() * dx * dx);
}

}  // namespace sctl

#include "sctl/density.hpp"

#include <cmath>

#include "sctl/fft.hpp"

namespace sctl {

SpatialDensity spatial_density_classical(const PhaseField& f) {
    if (!f.values.isFinite().all()) throw InputError("spatial_density_classical: non-finite input");
    Eigen::ArrayXd rho = f.values.rowwise().sum() * f.grid.dv();
    SpatialDensity out;
    out.grid = f.grid.space;
    out.values = std::move(rho);
    out.mass = out.values.sum() * out.grid.dx();
    return out;
}

SpatialDensity spatial_density_quantum(const MixedState& op) {
    validate_mixed_state(op);
    Eigen::ArrayXd rho = Eigen::ArrayXd::Zero(op.space.nx);
    for (int m = 0; m < op.rank(); ++m)
        rho += op.weights[m] * op.vectors.col(m).array().abs2();
    rho *= op.h();
    SpatialDensity out;
    out.grid = op.space;
    // Diagonal of a PSD kernel; tolerate only roundoff-scale negativity.
    if ((rho < -1e-14).any()) throw InputError("spatial_density_quantum: negative density");
    out.values = rho.max(0.0);
    out.mass = out.values.sum() * out.grid.dx();
    return out;
}

namespace {

void check_moment_order(int n) {
    if (n != 0 && n != 1 && n != 2 && n != 4)
        throw InputError("moments: order must be one of {0, 1, 2, 4}");
}

}  // namespace

double moments(const PhaseField& f, int n) {
    check_moment_order(n);
    if (n == 0) return f.mass;
    const Eigen::ArrayXd v = f.grid.v_nodes();
    const Eigen::ArrayXd w = v.abs().pow(n);
    double acc = 0.0;
    for (int j = 0; j < f.grid.nv; ++j) acc += w[j] * f.values.col(j).sum();
    return acc * f.grid.cell_volume();
}

Eigen::ArrayXd momentum_occupation(const SpatialGrid& space, const Eigen::Ref<const Eigen::VectorXcd>& psi) {
    // Expansion in the orthonormal plane waves e^{ikx}/sqrt(L):
    // c_k = (dx/sqrt(L)) * DFT(psi), so sum_k |c_k|^2 = integral |psi|^2.
    Eigen::VectorXcd c = fft(psi);
    const double scale = space.dx() * space.dx() / space.length();
    return c.array().abs2() * scale;
}

double moments(const MixedState& op, int n) {
    check_moment_order(n);
    if (n == 0) return op.scaled_trace();
    const Eigen::ArrayXd k = op.space.wavenumbers();
    const Eigen::ArrayXd p_pow = (op.hbar * k).abs().pow(n);
    double acc = 0.0;
    for (int m = 0; m < op.rank(); ++m) {
        const Eigen::ArrayXd occ = momentum_occupation(op.space, op.vectors.col(m));
        acc += op.weights[m] * (occ * p_pow).sum();
    }
    return op.h() * acc;
}

}  // namespace sctl

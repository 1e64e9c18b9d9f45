// Scratch validation harness for the discrete transform identities; the
// real doctest suites supersede this.
#include <cstdio>
#include <cmath>
#include "sctl/transforms.hpp"
#include "sctl/density.hpp"

using namespace sctl;

int main() {
    const double hbar = 0.05;
    SpatialGrid space(128, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 128);
    std::printf("v_extent = %.6f  sampling_ratio = %.12f\n", grid.v_extent, grid.sampling_ratio(hbar));

    // coherent state at (x0, p0)
    const double x0 = 0.3, p0 = 0.4;
    MixedState op = coherent_mixed_state(space, hbar, x0, p0);
    std::printf("trace = %.15f\n", op.scaled_trace());

    // Wigner: closed form (1/h) * 2 exp(-|z-z0|^2/hbar)
    PhaseField w = wigner_transform(op);
    double maxerr = 0.0;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) {
            const double dxs = space.wrap(grid.x(a) - x0);
            const double dvs = grid.v(j) - p0;
            const double ref = (2.0 / planck(hbar)) * std::exp(-(dxs*dxs + dvs*dvs)/hbar);
            maxerr = std::max(maxerr, std::abs(w.values(a,j) - ref));
        }
    std::printf("wigner closed-form max err = %.3e   mass = %.15f\n", maxerr, w.mass);

    // marginal = quantum density
    SpatialDensity rho = spatial_density_quantum(op);
    double margerr = 0.0;
    for (int a = 0; a < grid.nx(); ++a) {
        double m = 0.0;
        for (int j = 0; j < grid.nv; ++j) m += w.values(a,j);
        m *= grid.dv();
        margerr = std::max(margerr, std::abs(m - rho.values[a]));
    }
    std::printf("marginal vs rho max err = %.3e\n", margerr);

    // L2 identity
    double l2 = w.values.square().sum() * grid.cell_volume();
    double hs = planck(hbar) * op.weights.squaredNorm();
    std::printf("L2 = %.12e  hTr(op^2) = %.12e  rel = %.3e\n", l2, hs, std::abs(l2-hs)/hs);

    // round trip
    OperatorKernel back = weyl_quantize(w, hbar);
    OperatorKernel orig = to_kernel(op);
    std::printf("round trip scaled-HS err = %.3e (norm %.3e)\n",
                scaled_hs_distance(back, orig), scaled_hs_norm(orig));
    std::printf("hermiticity defect = %.3e, trace(back) = %.15f\n",
                back.hermiticity_defect(), back.scaled_trace());

    // husimi: doubled variance gaussian
    PhaseField hus = husimi_transform(op);
    double hmaxerr = 0.0;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) {
            const double dxs = space.wrap(grid.x(a) - x0);
            const double dvs = grid.v(j) - p0;
            const double ref = (1.0/(2.0*kPi*hbar)) * std::exp(-(dxs*dxs + dvs*dvs)/(2.0*hbar));
            hmaxerr = std::max(hmaxerr, std::abs(hus.values(a,j) - ref));
        }
    std::printf("husimi closed-form max err = %.3e  mass = %.15f\n", hmaxerr, hus.mass);

    // toeplitz of a dirac-like cell
    Eigen::ArrayXXd fv = Eigen::ArrayXXd::Zero(grid.nx(), grid.nv);
    int ia = grid.nx()/2 + 3, jv = grid.nv/2 - 5;
    fv(ia, jv) = 1.0 / grid.cell_volume();
    PhaseField dirac = make_probability_field(grid, fv);
    MixedState top = toeplitz_quantize(dirac, hbar);
    std::printf("toeplitz(dirac): rank = %d leading scaled weight = %.9f trace = %.12f\n",
                top.rank(), planck(hbar)*top.weights.maxCoeff(), top.scaled_trace());

    // toeplitz trace identity on a smooth symbol + wigner(toeplitz) = g*f
    Eigen::ArrayXXd sm(grid.nx(), grid.nv);
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) {
            const double xx = space.wrap(grid.x(a) - 0.2);
            const double vv = grid.v(j) + 0.2;
            sm(a,j) = std::exp(-(xx*xx)/(2*0.16) - (vv*vv)/(2*0.0225));
        }
    PhaseField fsm = make_normalized_field(grid, sm);
    MixedState tsm = toeplitz_quantize(fsm, hbar);
    std::printf("toeplitz(smooth): rank = %d  trace = %.12f\n", tsm.rank(), tsm.scaled_trace());
    PhaseField wt = wigner_transform(tsm);
    PhaseField mol = husimi_of_field(fsm, hbar);
    std::printf("wigner(toeplitz(f)) vs g_h*f max err = %.3e\n",
                (wt.values - mol.values).abs().maxCoeff());
    return 0;
}

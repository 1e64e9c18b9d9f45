#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sctl/density.hpp"
#include "sctl/rng.hpp"
#include "sctl/transforms.hpp"
#include "sctl/wh.hpp"

using namespace sctl;

namespace {

// Sparse probability field supported on a few cells of a compatible grid.
PhaseField sparse_field(const PhaseGrid& grid, const std::vector<std::tuple<int, int, double>>& cells) {
    Eigen::ArrayXXd vals = Eigen::ArrayXXd::Zero(grid.nx(), grid.nv);
    for (const auto& [a, j, m] : cells) vals(a, j) += m;
    return make_normalized_field(grid, vals, MarginPolicy::Ignore);
}

// Smooth random low-rank state built from a Toeplitz quantization of a
// random two-bump symbol (guaranteed valid MixedState).
MixedState random_toeplitz_state(const PhaseGrid& grid, double hbar, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::ArrayXXd vals(grid.nx(), grid.nv);
    const double x1 = 2.0 * uni(rng) - 1.0, x2 = 2.0 * uni(rng) - 1.0;
    const double v1 = (0.3 * uni(rng) - 0.15) * grid.v_extent;
    const double v2 = (0.3 * uni(rng) - 0.15) * grid.v_extent;
    const double sx = 0.25 + 0.3 * uni(rng);
    const double sv = (0.16 + 0.06 * uni(rng)) * grid.v_extent;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) {
            const double dx1 = grid.space.wrap(grid.x(a) - x1), dx2 = grid.space.wrap(grid.x(a) - x2);
            const double dv1 = grid.v(j) - v1, dv2 = grid.v(j) - v2;
            vals(a, j) = std::exp(-0.5 * (dx1 * dx1 / (sx * sx) + dv1 * dv1 / (sv * sv))) +
                         0.7 * std::exp(-0.5 * (dx2 * dx2 / (sx * sx) + dv2 * dv2 / (sv * sv)));
        }
    PhaseField f = make_normalized_field(grid, vals, MarginPolicy::Ignore);
    return toeplitz_quantize(f, hbar);
}

}  // namespace

TEST_CASE("wh floor and husimi fixed point") {
    const double hbar = 0.05;
    SpatialGrid space(64, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 64);
    MixedState op = coherent_mixed_state(space, hbar, 0.3, 0.1);

    // f = husimi(op): the W2 term vanishes and the floor remains.
    PhaseField husimi = husimi_transform(op, grid.nv);
    WhLowerResult lo = wh_lower(husimi, op);
    CHECK(lo.value == doctest::Approx(std::sqrt(hbar)).epsilon(1e-6));

    // Signed inputs are rejected with guidance.
    PhaseField wig = wigner_transform(op, grid.nv);
    PhaseField wig_signed = wig;
    wig_signed.kind = FieldKind::Wigner;
    CHECK_THROWS_AS(wh_lower(wig_signed, op), InputError);
}

TEST_CASE("wh_lower: separated states recover the distance within 5%") {
    const double hbar = 0.02;
    SpatialGrid space(128, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 128);
    const double x_op = -1.2, x_f = 0.9;  // distance 2.1 >> sqrt(hbar)
    MixedState op = coherent_mixed_state(space, hbar, x_op, 0.0);
    int af = 0;
    double best = 1e9;
    for (int a = 0; a < grid.nx(); ++a)
        if (std::abs(grid.x(a) - x_f) < best) {
            best = std::abs(grid.x(a) - x_f);
            af = a;
        }
    PhaseField f = sparse_field(grid, {{af, grid.nv / 2, 1.0}});
    WhLowerResult lo = wh_lower(f, op);
    const double dist = std::abs(grid.x(af) - x_op);
    CHECK(lo.value > 0.95 * dist);
    CHECK(lo.value < 1.05 * dist);
}

TEST_CASE("wh_upper: exactly-Toeplitz operator has zero penalty") {
    const double hbar = 0.05;
    SpatialGrid space(64, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 64);
    std::mt19937_64 rng = substream(101ULL, 0);
    MixedState op = random_toeplitz_state(grid, hbar, rng);
    const SymbolResult sym = toeplitz_symbol(op, grid.nv);

    WhUpperResult up = wh_upper_toeplitz(sym.symbol, op);
    CHECK(up.penalty == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(up.w2_term < 2e-3);  // recovered symbol, W2(f, g) ~ 0
    CHECK(up.value == doctest::Approx(std::sqrt(hbar)).epsilon(0.05));
    CHECK(up.value >= wh_lower(sym.symbol, op).value - 1e-9);
}

TEST_CASE("wh_upper: coherent state vs shifted Dirac cell") {
    const double hbar = 0.05;
    SpatialGrid space(128, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 128);
    const int a0 = 40, j0 = grid.nv / 2;
    MixedState op = coherent_mixed_state(space, hbar, grid.x(a0), grid.v(j0));
    const int a1 = 88;
    PhaseField f = sparse_field(grid, {{a1, j0, 1.0}});
    WhUpperResult up = wh_upper_toeplitz(f, op);
    const double dist = std::abs(grid.space.wrap(grid.x(a1) - grid.x(a0)));
    CHECK(up.value == doctest::Approx(dist + std::sqrt(hbar)).epsilon(0.05));
    // Sandwich against the lower estimate.
    CHECK(wh_lower(f, op).value <= up.value + 1e-9);
}

TEST_CASE("sdp: forced coupling on the Dirac/coherent instance gives d*hbar") {
    const double hbar = 0.5;
    SpatialGrid space(16, kPi);
    const double x0 = space.x(5), p0 = 0.25;
    MixedState op = coherent_mixed_state(space, hbar, x0, p0);
    SdpInstance inst;
    inst.cells = {PhaseCell{x0, p0, 1.0}};
    inst.op = op;
    SdpResult r = wh_exact_sdp(inst);
    CHECK(r.converged);
    CHECK(r.value_sq == doctest::Approx(hbar).epsilon(2e-6));
    CHECK(r.gap < 1e-5);
    CHECK(r.value_sq >= wh_floor_sq(1, hbar) - 1e-8);
    r.coupling.validate(op);
}

TEST_CASE("sdp matches the exhaustive feasible-set scan at N=2, K=2") {
    // N = 2 grid: gamma_1 parametrized over the Bloch ball with fixed
    // trace; gamma_2 = S - gamma_1.  Two-stage mesh scan to ~1e-4.
    const double hbar = 0.8;
    SpatialGrid space(2, 1.0);
    // A valid 2x2 mixed state: weights + orthonormal vectors.
    Eigen::VectorXd w(2);
    w << 0.7 / planck(hbar), 0.3 / planck(hbar);
    Eigen::MatrixXcd v(2, 2);
    const double c = std::cos(0.4), s = std::sin(0.4);
    v << Complex(c, 0), Complex(-s, 0.1), Complex(s, 0.1), Complex(c, 0);
    // Orthonormalize in the dx inner product.
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(v);
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(2, 2);
    v = q / std::sqrt(space.dx());
    MixedState op = make_mixed_state(hbar, space, w, v);

    SdpInstance inst;
    inst.cells = {PhaseCell{space.x(0), 0.3, 0.45}, PhaseCell{space.x(1), -0.2, 0.55}};
    inst.op = op;
    SdpOptions opts;
    opts.target_gap = 1e-7;
    SdpResult r = wh_exact_sdp(inst, opts);
    CHECK(r.converged);

    // Oracle: scan gamma_1 = t/2 I + a sx + b sy + c sz over the PSD ball.
    const Eigen::MatrixXcd target = to_kernel(op).k * space.dx() * planck(hbar);
    const Eigen::MatrixXcd c0 = cell_cost_operator(space, hbar, inst.cells[0].x, inst.cells[0].v);
    const Eigen::MatrixXcd c1 = cell_cost_operator(space, hbar, inst.cells[1].x, inst.cells[1].v);
    const double t0 = inst.cells[0].mass;
    auto pauli = [](int k) {
        Eigen::MatrixXcd m(2, 2);
        if (k == 0) m << 0, 1, 1, 0;
        if (k == 1) m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
        if (k == 2) m << 1, 0, 0, -1;
        return m;
    };
    auto scan = [&](double ca, double cb, double cc, double radius, int steps) {
        double best = 1e300;
        Eigen::Vector3d arg(ca, cb, cc);
        for (int ia = 0; ia <= steps; ++ia)
            for (int ib = 0; ib <= steps; ++ib)
                for (int ic = 0; ic <= steps; ++ic) {
                    const double a = ca + radius * (2.0 * ia / steps - 1.0);
                    const double b = cb + radius * (2.0 * ib / steps - 1.0);
                    const double cz = cc + radius * (2.0 * ic / steps - 1.0);
                    if (a * a + b * b + cz * cz > (t0 / 2) * (t0 / 2)) continue;
                    Eigen::MatrixXcd g1 = (t0 / 2) * Eigen::MatrixXcd::Identity(2, 2) +
                                          a * pauli(0) + b * pauli(1) + cz * pauli(2);
                    Eigen::MatrixXcd g2 = target - g1;
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g2);
                    if (es.eigenvalues().minCoeff() < -1e-12) continue;
                    const double val = (c0 * g1).trace().real() + (c1 * g2).trace().real();
                    if (val < best) {
                        best = val;
                        arg = Eigen::Vector3d(a, b, cz);
                    }
                }
        return std::make_pair(best, arg);
    };
    auto [coarse, at] = scan(0.0, 0.0, 0.0, t0 / 2, 40);
    auto [fine, at2] = scan(at[0], at[1], at[2], (t0 / 2) / 20.0, 40);
    CHECK(r.value_sq == doctest::Approx(std::min(coarse, fine)).epsilon(1e-4));
    CHECK(r.dual_sq <= std::min(coarse, fine) + 1e-6);
}

TEST_CASE("sandwich and floor on random desk instances" * doctest::timeout(600)) {
    const double hbar = 0.35;
    SpatialGrid space(16, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 16);
    std::mt19937_64 rng = substream(7777ULL, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    for (int trial = 0; trial < 6; ++trial) {
        // f on <= 8 random cells in the interior band.
        std::vector<std::tuple<int, int, double>> cells;
        const int n_cells = 2 + static_cast<int>(uni(rng) * 6);
        for (int k = 0; k < n_cells; ++k)
            cells.emplace_back(static_cast<int>(uni(rng) * grid.nx()),
                               4 + static_cast<int>(uni(rng) * (grid.nv - 8)), 0.1 + uni(rng));
        PhaseField f = sparse_field(grid, cells);
        MixedState op = random_toeplitz_state(grid, hbar, rng);

        WhEstimate est = wh_estimate(f, op, /*run_sdp=*/true);
        REQUIRE(est.exact.has_value());
        CHECK(*est.gap < 1e-5);
        CHECK(est.lower <= *est.exact + 1e-5);
        CHECK(*est.exact <= est.upper + 1e-5);
        CHECK(*est.exact * *est.exact >= wh_floor_sq(1, hbar) - 1e-8);

        // Marginal comparison certificate.
        CHECK(marginal_w2_check(f, op, est).pass());
    }
}

TEST_CASE("triangle inequality through a Toeplitz symbol") {
    const double hbar = 0.1;
    SpatialGrid space(32, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 32);
    std::mt19937_64 rng = substream(4242ULL, 0);
    for (int trial = 0; trial < 4; ++trial) {
        MixedState op = random_toeplitz_state(grid, hbar, rng);
        const PhaseField g = toeplitz_symbol(op, grid.nv).symbol;
        MixedState op_g = toeplitz_quantize(g, hbar);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::vector<std::tuple<int, int, double>> cells;
        for (int k = 0; k < 5; ++k)
            cells.emplace_back(static_cast<int>(uni(rng) * grid.nx()),
                               6 + static_cast<int>(uni(rng) * (grid.nv - 12)), 0.1 + uni(rng));
        PhaseField f = sparse_field(grid, cells);

        const double whf = wh_upper_toeplitz(f, op_g).value;
        const double whg = wh_upper_toeplitz(g, op_g).value;
        const DiscreteMeasure mf = measure_from_field(f), mg = measure_from_field(g);
        const double w2fg = w2(mf, mg).value;
        CHECK(whf <= w2fg + whg + 1e-6);
    }
}

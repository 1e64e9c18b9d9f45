#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sctl/comparison.hpp"
#include "sctl/constants.hpp"
#include "sctl/coulomb.hpp"
#include "sctl/errors.hpp"
#include "sctl/grid.hpp"
#include "sctl/gronwall.hpp"
#include "sctl/rng.hpp"

using namespace sctl;

namespace {

// Independent root for theta^2 = (1-theta)^3 by plain bisection; the oracle
// for the constants module.
double theta2_oracle() {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid * mid - std::pow(1.0 - mid, 3);
        (f < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("constants reproduce the stated values and intervals") {
    const BoundConstants bc = constants(1.0);

    const double t1 = (3.0 - std::sqrt(5.0)) / 2.0;
    CHECK(bc.theta1 == doctest::Approx(t1).epsilon(1e-15));
    CHECK(bc.theta1 > 0.38);
    CHECK(bc.theta1 < 0.39);

    const double t2 = theta2_oracle();
    CHECK(std::abs(bc.theta2 - t2) < 1e-14);
    CHECK(std::abs(bc.theta2 * bc.theta2 - std::pow(1.0 - bc.theta2, 3)) < 1e-14);
    CHECK(bc.theta2 > 0.43);
    CHECK(bc.theta2 < 0.44);

    const double c = 2.0 / 3.0 + (std::sqrt(5.0) - t2) / 2.0;
    CHECK(bc.c == doctest::Approx(c).epsilon(1e-14));
    CHECK(bc.c < 1.57);
    CHECK(bc.c2 == doctest::Approx(c + 0.5).epsilon(1e-15));
    CHECK(bc.c2 < 2.07);

    CHECK(std::abs(std::log(bc.x0) - (bc.c - 1.0 - std::sqrt(1.0 + bc.c * bc.c))) < 1e-14);
    CHECK(bc.x0 > 0.27);
    CHECK(bc.x0 < 0.28);

    CHECK(bc.y0 == doctest::Approx(1.0 + std::sqrt(1.0 + bc.c * bc.c) - bc.c).epsilon(1e-15));
    CHECK(bc.y0 < 1.3);
    // y0 = -ln x0, so Psi(y) = c + y holds from y0 on.
    CHECK(bc.y0 == doctest::Approx(-std::log(bc.x0)).epsilon(1e-13));
}

TEST_CASE("interaction length R from the optimized constant") {
    const BoundConstants bc = constants(1.0, 1.0, 1.0);
    const double r3 = 3.0 / (8.0 * kPi * std::pow(bc.theta1, 3));
    CHECK(std::pow(bc.R, 3) == doctest::Approx(r3).epsilon(1e-13));
    CHECK(bc.R == doctest::Approx(1.289).epsilon(2e-3));
    // kappa scales R^3 linearly; C_inf inversely.
    CHECK(std::pow(constants(8.0).R, 3) == doctest::Approx(8.0 * r3).epsilon(1e-12));
    CHECK(std::pow(constants(1.0, 2.0).R, 3) == doctest::Approx(r3 / 2.0).epsilon(1e-12));
    CHECK(constants(0.0).R == 1.0);
}

TEST_CASE("comparison function Phi: corner values, continuity, concavity") {
    const BoundConstants bc = constants(1.0);

    const double phi_x0 = bc.x0 * std::pow(bc.c - std::log(bc.x0), 2);
    CHECK(phi(bc, bc.x0) == doctest::Approx(phi_x0).epsilon(1e-14));
    CHECK(phi_x0 == doctest::Approx(2.2496).epsilon(2e-3));

    const double phi_1 = phi_x0 + bc.c * bc.c * (1.0 - bc.x0);
    CHECK(phi(bc, 1.0) == doctest::Approx(phi_1).epsilon(1e-14));
    CHECK(phi_1 == doctest::Approx(4.036).epsilon(2e-3));

    // Continuity and one-sided derivative match at x0 (tangent extension).
    const double eps = 1e-8;
    CHECK(std::abs(phi(bc, bc.x0 - 1e-13) - phi(bc, bc.x0 + 1e-13)) < 1e-12);
    const double dl = (phi(bc, bc.x0) - phi(bc, bc.x0 - eps)) / eps;
    const double dr = (phi(bc, bc.x0 + eps) - phi(bc, bc.x0)) / eps;
    CHECK(std::abs(dl - dr) < 1e-6);
    CHECK(dr == doctest::Approx(bc.c * bc.c).epsilon(1e-6));

    // Concave and increasing on a log grid.
    double prev = 0.0;
    for (int k = -60; k <= 20; ++k) {
        const double x = std::pow(10.0, k / 10.0);
        const double p = phi(bc, x);
        CHECK(p > prev);
        prev = p;
        const double h = 1e-4 * x;
        const double second = phi(bc, x + h) - 2.0 * p + phi(bc, x - h);
        CHECK(second <= 1e-10 * std::max(1.0, p));
    }
}

TEST_CASE("Psi linearization and ell limit") {
    const BoundConstants bc = constants(1.0);
    CHECK(psi(bc, 2.0) == doctest::Approx(bc.c + 2.0).epsilon(1e-12));
    CHECK(psi(bc, bc.y0) == doctest::Approx(bc.c + bc.y0).epsilon(1e-12));
    CHECK(psi(bc, 10.0) == doctest::Approx(bc.c + 10.0).epsilon(1e-12));

    // ell decreasing, convex on a log grid; limit C_inf (1 + 2c).
    const double limit = 1.0 + 2.0 * bc.c;
    CHECK(std::abs(ell(bc, 1e6, 1.0) - limit) < 1e-2);
    double prev = ell(bc, 1e-8, 1.0);
    for (int k = -70; k <= 60; ++k) {
        const double q = std::pow(10.0, k / 10.0);
        const double l = ell(bc, q, 1.0);
        CHECK(l <= prev + 1e-12);
        prev = l;
        const double h = 1e-4 * q;
        const double second = ell(bc, q + h, 1.0) - 2.0 * l + ell(bc, q - h, 1.0);
        CHECK(second >= -1e-9 * std::max(1.0, l));
    }
    CHECK(ell(bc, 0.5, 3.0) == doctest::Approx(3.0 * ell(bc, 0.5, 1.0)).epsilon(1e-14));
}

TEST_CASE("gronwall bound: closed-form branches") {
    const BoundConstants bc = constants(1.0);
    const CinfTrajectory traj = CinfTrajectory::constant(1.0, 2.0);

    // Q0 = 1: tau = 0, second branch from the start; rate sqrt(c2 + y0).
    const double lam = std::sqrt(2.0) * 1.3;
    CHECK(gronwall_bound(bc, 1.0, traj, 1.3) ==
          doctest::Approx(std::exp(2.0 * std::sqrt(bc.c2 + bc.y0) * lam)).epsilon(1e-12));
    // The printed display uses sqrt(c2) there.
    CHECK(gronwall_bound_paper_form(bc, 1.0, traj, 1.3) ==
          doctest::Approx(std::exp(2.0 * std::sqrt(bc.c2) * lam)).epsilon(1e-12));

    // Monotone increasing in t for C_inf == 1.
    double prev = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const double b = gronwall_bound(bc, 1e-4, traj, 2.0 * i / 40.0);
        CHECK(b >= prev);
        prev = b;
    }

    // On the first branch the bound solves the comparison ODE exactly.
    const double q_rk4 = comparison_ode_rk4(bc, 1e-6, traj, 0.5, 1e-5);
    CHECK(gronwall_bound(bc, 1e-6, traj, 0.5) == doctest::Approx(q_rk4).epsilon(1e-8));
}

TEST_CASE("gronwall bound dominates the comparison ODE" * doctest::timeout(120)) {
    const BoundConstants bc = constants(1.0);
    std::mt19937_64 rng = substream(20240817ULL, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        // Piecewise-constant C_inf trajectory with values in [1, 10].
        const int pieces = 1 + static_cast<int>(uni(rng) * 4);
        CinfTrajectory traj;
        traj.times.resize(pieces);
        traj.values.resize(pieces);
        traj.times[0] = 0.0;
        for (int i = 1; i < pieces; ++i) traj.times[i] = traj.times[i - 1] + 0.2 + 1.6 * uni(rng) / pieces;
        for (int i = 0; i < pieces; ++i) traj.values[i] = 1.0 + 9.0 * uni(rng);

        for (int j = 0; j < 4; ++j) {
            const double q0 = std::pow(10.0, -8.0 * uni(rng));
            for (double t : {0.4, 1.1, 2.0}) {
                const double q = comparison_ode_rk4(bc, q0, traj, t, 2e-4);
                const double b = gronwall_bound(bc, q0, traj, t);
                CHECK((b - q) / q >= -1e-3);
            }
        }
    }
}

TEST_CASE("classical stability: closed form and RK4 oracle") {
    // eta = e^{-4}, C = 1, t = 1: |ln Y| = (2 - 1)^2 = 1.
    const ClassicalBound cb = classical_bound(std::exp(-4.0), 1.0, 1.0);
    CHECK(cb.in_domain);
    CHECK(cb.y == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    // t = 0 returns the initial condition.
    CHECK(classical_bound(0.37, 2.0, 0.0).y == doctest::Approx(0.37).epsilon(1e-14));

    // Domain flag when sqrt(|ln eta|) < C t.
    CHECK(!classical_bound(std::exp(-1.0), 2.0, 1.0).in_domain);

    // RK4 matches the closed form to 1e-6 inside the validity domain.
    std::mt19937_64 rng = substream(7ULL, 1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double eta = std::exp(-(2.0 + 8.0 * uni(rng)));
        const double C = 0.3 + 1.5 * uni(rng);
        const double t_max = (std::sqrt(-std::log(eta)) - 0.2) / C;
        const double t = std::min(2.0, 0.9 * t_max);
        const double y_rk4 = classical_ode_rk4(eta, C, t, 1e-4);
        const double y_cf = classical_bound(eta, C, t).y;
        CHECK(std::abs(y_rk4 - y_cf) / y_cf < 1e-6);
    }

    // Weighted form <ln Q> Q <= eta exp(C_T sqrt(|ln eta|)).
    for (int i = 0; i < 20; ++i) {
        const double eta = std::exp(-(2.0 + 10.0 * uni(rng)));
        const double C = 0.3 + 1.5 * uni(rng);
        const ClassicalBound b = classical_bound(eta, C, 1.0);
        if (b.in_domain) CHECK(b.weighted_lhs <= b.weighted_rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("main theorem bound: endpoint cases and monotonicity") {
    const CinfTrajectory one = CinfTrajectory::constant(1.0, 2.0);
    // t = 0: prefactors are 1 and Lambda_eps = 0.
    CHECK(main_theorem_bound(0.01, 0.3, one, 0.0) ==
          doctest::Approx(std::max(5.0 / 0.3 * std::pow(0.01, 0.7), 0.03)).epsilon(1e-13));
    // C_inf == 1, t = 1, eps = 1/2: Lambda = 1, Lambda_eps = 3.
    const double w0 = 0.04;
    CHECK(main_theorem_bound(w0, 0.5, one, 1.0) ==
          doctest::Approx(std::max(10.0 * std::sqrt(w0), 3.0 * w0) * std::exp(3.0)).epsilon(1e-13));

    // Monotone increasing in t, W_init, and each trajectory sample.
    CinfTrajectory traj;
    traj.times.resize(3);
    traj.values.resize(3);
    traj.times << 0.0, 0.5, 1.0;
    traj.values << 2.0, 3.0, 1.5;
    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double b = main_theorem_bound(0.05, 0.2, traj, 1.5 * i / 20.0);
        CHECK(b >= prev);
        prev = b;
    }
    CHECK(main_theorem_bound(0.06, 0.2, traj, 1.5) > main_theorem_bound(0.05, 0.2, traj, 1.5));
    CinfTrajectory lower = traj;
    lower.values[1] = 2.5;
    CHECK(main_theorem_bound(0.05, 0.2, lower, 1.5) <= main_theorem_bound(0.05, 0.2, traj, 1.5));
    CHECK_THROWS_AS(main_theorem_bound(0.05, 1.2, traj, 1.0), InputError);
}

TEST_CASE("elementary Coulomb inequality: sharpness and Monte Carlo") {
    // Aligned points: equality.
    Certificate eq = coulomb_elementary(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(2, 0, 0));
    CHECK(eq.pass());
    CHECK(eq.measured_value == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(eq.bound_value == doctest::Approx(0.75).epsilon(1e-14));

    // x == y: degenerate equality 0 <= 0.
    Certificate zero = coulomb_elementary(Eigen::Vector3d(0.3, -1, 2), Eigen::Vector3d(0.3, -1, 2));
    CHECK(zero.pass());
    CHECK(zero.measured_value == 0.0);

    std::mt19937_64 rng = substream(42ULL, 3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> logr(std::log(1e-3), std::log(1e3));
    for (int i = 0; i < 20000; ++i) {
        Eigen::Vector3d x(uni(rng), uni(rng), uni(rng));
        Eigen::Vector3d y(uni(rng), uni(rng), uni(rng));
        x *= std::exp(logr(rng)) / std::max(x.norm(), 1e-12);
        y *= std::exp(logr(rng)) / std::max(y.norm(), 1e-12);
        CHECK(coulomb_elementary(x, y).pass());
    }
}

TEST_CASE("log-Lipschitz field certificate on the corpus") {
    // Uniform ball, both points outside: shell-theorem closed form.
    DensityModel ball;
    ball.comps.push_back({RadialComponent::Kind::Ball, Eigen::Vector3d::Zero(), 1.0, 1.0});
    const Eigen::Vector3d x(1.5, 0.2, 0.0), y(2.5, -0.4, 0.3);
    Certificate c = loglip_field_certificate(ball, x, y, /*use_quadrature=*/false);
    CHECK(c.pass());
    CHECK(c.margin > 0.0);

    // Coincident points.
    Certificate c0 = loglip_field_certificate(ball, x, x, false);
    CHECK(c0.pass());
    CHECK(c0.measured_value == 0.0);

    // Quadrature evaluation agrees with the closed form.
    const QuadratureField q = coulomb_field_quadrature(ball, x, 1e-9);
    CHECK((q.value - ball.field(x)).norm() < 1e-7);
    DensityModel gm = random_corpus_density(11ULL, 4);
    const Eigen::Vector3d p(0.7, -0.3, 1.1);
    const QuadratureField q2 = coulomb_field_quadrature(gm, p, 1e-9);
    CHECK((q2.value - gm.field(p)).norm() < 2e-7 * std::max(1.0, gm.field(p).norm()));

    // Random corpus campaign slice (closed form + quadrature both pass).
    std::mt19937_64 rng = substream(5ULL, 0);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        DensityModel rho = random_corpus_density(99ULL, i);
        const Eigen::Vector3d a(uni(rng), uni(rng), uni(rng));
        Eigen::Vector3d b = a + Eigen::Vector3d(uni(rng), uni(rng), uni(rng)) * 0.3;
        Certificate cf = loglip_field_certificate(rho, a, b, false);
        CHECK(cf.pass());
    }
}

TEST_CASE("integrated log-Lipschitz certificate") {
    DensityModel rho = random_corpus_density(123ULL, 0);

    // Diagonal coupling: zero displacement.
    std::vector<CouplingAtom> diag;
    diag.push_back({Eigen::Vector3d(0.5, 0, 0), Eigen::Vector3d(0.5, 0, 0), 1.0});
    Certificate cd = loglip2_integral_certificate(rho, diag);
    CHECK(cd.pass());
    CHECK(cd.measured_value == doctest::Approx(0.0));

    // Two-point coupling consistent with the pointwise certificate.
    std::vector<CouplingAtom> two;
    two.push_back({Eigen::Vector3d(0.9, 0.1, 0.0), Eigen::Vector3d(0.4, -0.2, 0.5), 1.0});
    Certificate c2 = loglip2_integral_certificate(rho, two);
    CHECK(c2.pass());

    // Random discrete couplings over corpus densities.
    std::mt19937_64 rng = substream(321ULL, 0);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        DensityModel r = random_corpus_density(77ULL, trial);
        std::vector<CouplingAtom> gamma;
        const int n = 2 + static_cast<int>(u01(rng) * 6);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            CouplingAtom a;
            a.x = Eigen::Vector3d(uni(rng), uni(rng), uni(rng));
            a.y = a.x + Eigen::Vector3d(uni(rng), uni(rng), uni(rng)) * u01(rng);
            a.mass = 0.1 + u01(rng);
            total += a.mass;
            gamma.push_back(a);
        }
        for (auto& a : gamma) a.mass /= total;
        CHECK(loglip2_integral_certificate(r, gamma).pass());
    }
}

#include "sctl/coulomb.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sctl/comparison.hpp"
#include "sctl/errors.hpp"
#include "sctl/grid.hpp"
#include "sctl/rng.hpp"

namespace sctl {

Certificate coulomb_elementary(const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    using LD = long double;
    const LD nx = std::sqrt((LD)x[0] * x[0] + (LD)x[1] * x[1] + (LD)x[2] * x[2]);
    const LD ny = std::sqrt((LD)y[0] * y[0] + (LD)y[1] * y[1] + (LD)y[2] * y[2]);
    if (nx == 0.0L || ny == 0.0L) throw InputError("coulomb_elementary: zero vector");
    LD lhs2 = 0.0L, d2 = 0.0L;
    for (int i = 0; i < 3; ++i) {
        const LD u = (LD)x[i] / (nx * nx * nx) - (LD)y[i] / (ny * ny * ny);
        lhs2 += u * u;
        const LD w = (LD)y[i] - (LD)x[i];
        d2 += w * w;
    }
    const LD lhs = std::sqrt(lhs2);
    const LD rhs = std::sqrt(d2) / (nx * ny) * (1.0L / nx + 1.0L / ny);
    const double ratio = rhs > 0.0L ? static_cast<double>(lhs / rhs) : (lhs > 0.0L ? 2.0 : 1.0);
    std::uint64_t digest = fnv1a(x.data(), 3 * sizeof(double));
    digest = fnv1a(y.data(), 3 * sizeof(double), digest);
    const double tol = 1e-12 * static_cast<double>(rhs);
    return make_certificate("coulomb_elementary", digest, static_cast<double>(rhs),
                            static_cast<double>(lhs), tol,
                            "ratio=" + std::to_string(ratio));
}

namespace {

// Normalized enclosed mass M(r) in [0, 1] of a unit-mass component.
double enclosed(const RadialComponent& c, double r) {
    if (c.kind == RadialComponent::Kind::Ball) {
        const double u = r / c.param;
        return u >= 1.0 ? 1.0 : u * u * u;
    }
    const double s = c.param;
    return std::erf(r / (s * std::sqrt(2.0))) -
           std::sqrt(2.0 / kPi) * (r / s) * std::exp(-r * r / (2.0 * s * s));
}

}  // namespace

double DensityModel::l1_mass() const {
    double m = 0.0;
    for (const auto& c : comps) m += c.mass;
    return m;
}

double DensityModel::value(const Eigen::Vector3d& w) const {
    double rho = 0.0;
    for (const auto& c : comps) {
        const double r = (w - c.center).norm();
        if (c.kind == RadialComponent::Kind::Ball) {
            if (r <= c.param) rho += c.mass * 3.0 / (4.0 * kPi * c.param * c.param * c.param);
        } else {
            const double s = c.param;
            rho += c.mass * std::pow(2.0 * kPi * s * s, -1.5) * std::exp(-r * r / (2.0 * s * s));
        }
    }
    return rho;
}

double DensityModel::sup_norm() const {
    // Candidates: component centers and samples along every center pair,
    // then a short gradient ascent on the Gaussian part.
    std::vector<Eigen::Vector3d> cands;
    for (const auto& c : comps) cands.push_back(c.center);
    for (std::size_t i = 0; i < comps.size(); ++i)
        for (std::size_t j = i + 1; j < comps.size(); ++j)
            for (int k = 1; k < 32; ++k)
                cands.push_back(comps[i].center +
                                (k / 32.0) * (comps[j].center - comps[i].center));
    double best = 0.0;
    Eigen::Vector3d best_pt = comps.empty() ? Eigen::Vector3d::Zero() : comps[0].center;
    for (const auto& p : cands) {
        const double v = value(p);
        if (v > best) {
            best = v;
            best_pt = p;
        }
    }
    Eigen::Vector3d p = best_pt;
    double step = 0.05;
    for (int it = 0; it < 200 && step > 1e-13; ++it) {
        bool improved = false;
        for (int axis = 0; axis < 3; ++axis)
            for (double sgn : {1.0, -1.0}) {
                Eigen::Vector3d q = p;
                q[axis] += sgn * step;
                const double v = value(q);
                if (v > best) {
                    best = v;
                    p = q;
                    improved = true;
                }
            }
        if (!improved) step *= 0.5;
    }
    return best;
}

Eigen::Vector3d DensityModel::field(const Eigen::Vector3d& x) const {
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    for (const auto& c : comps) {
        const Eigen::Vector3d u = x - c.center;
        const double r = u.norm();
        if (r < 1e-12) continue;  // radial symmetry: zero field at the center
        f += c.mass * enclosed(c, r) / (r * r * r) * u;
    }
    return f;
}

double DensityModel::support_radius(const Eigen::Vector3d& x) const {
    double rmax = 0.0;
    for (const auto& c : comps) {
        const double d = (x - c.center).norm();
        const double reach = c.kind == RadialComponent::Kind::Ball ? c.param : 9.0 * c.param;
        rmax = std::max(rmax, d + reach);
    }
    return rmax;
}

DensityModel random_corpus_density(std::uint64_t seed, std::uint64_t index) {
    auto rng = substream(seed, index);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    DensityModel m;
    const int n = 1 + static_cast<int>(uni(rng) * 4.0);
    std::vector<double> masses;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        RadialComponent c;
        c.kind = uni(rng) < 0.5 ? RadialComponent::Kind::Ball : RadialComponent::Kind::Gaussian;
        c.center = Eigen::Vector3d(4.0 * uni(rng) - 2.0, 4.0 * uni(rng) - 2.0, 4.0 * uni(rng) - 2.0);
        c.param = c.kind == RadialComponent::Kind::Ball ? 0.3 + 1.2 * uni(rng) : 0.2 + 0.8 * uni(rng);
        c.mass = 0.2 + uni(rng);
        total += c.mass;
        m.comps.push_back(c);
    }
    for (auto& c : m.comps) c.mass /= total;  // ||rho||_1 = 1
    return m;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

// Angular integral A(r) = int_{S^2} omega rho(x + r omega) domega, exact
// per component.  Both profiles are axially symmetric about the unit vector
// toward the component center, so only the cos(theta) moment survives:
//  - ball: the cap {omega . u >= mu_c} gives u * pi (1 - mu_c^2);
//  - gaussian: u * 2 pi e^{-(d^2+r^2)/(2 s^2)} * (2/b^2)(b cosh b - sinh b)
//    with b = r d / s^2, rewritten with e^{-(d-r)^2/..} terms for stability.
Eigen::Vector3d angular_exact(const DensityModel& rho, const Eigen::Vector3d& x, double r) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    if (r <= 0.0) return acc;
    for (const auto& c : rho.comps) {
        const Eigen::Vector3d uvec = c.center - x;
        const double d = uvec.norm();
        if (d < 1e-14) continue;  // symmetric shell: zero vector moment
        const Eigen::Vector3d u = uvec / d;
        if (c.kind == RadialComponent::Kind::Ball) {
            const double a = c.param;
            const double rho0 = c.mass * 3.0 / (4.0 * kPi * a * a * a);
            double mu_c = (d * d + r * r - a * a) / (2.0 * r * d);
            if (mu_c >= 1.0) continue;        // shell misses the ball
            mu_c = std::max(mu_c, -1.0);      // shell fully inside
            acc += rho0 * kPi * (1.0 - mu_c * mu_c) * u;
        } else {
            const double s2 = c.param * c.param;
            const double amp = c.mass * std::pow(2.0 * kPi * s2, -1.5);
            const double b = r * d / s2;
            double moment;  // int_{-1}^{1} mu e^{b mu} dmu * e^{-(d^2+r^2)/(2 s^2)}
            if (b < 1e-4) {
                moment = (2.0 * b / 3.0) * (1.0 + b * b / 10.0) *
                         std::exp(-(d * d + r * r) / (2.0 * s2));
            } else {
                const double em = std::exp(-(d - r) * (d - r) / (2.0 * s2));
                const double ep = std::exp(-(d + r) * (d + r) / (2.0 * s2));
                moment = ((b - 1.0) * em + (b + 1.0) * ep) / (b * b);
            }
            acc += amp * 2.0 * kPi * moment * u;
        }
    }
    return acc;
}

}  // namespace

QuadratureField coulomb_field_quadrature(const DensityModel& rho, const Eigen::Vector3d& x,
                                         double rel_tol, int max_panels, int) {
    static std::vector<double> n7, w7, n15, w15;
    if (n7.empty()) {
        gauss_legendre(7, n7, w7);
        gauss_legendre(15, n15, w15);
    }
    const double rmax = rho.support_radius(x);

    struct Panel {
        double a, b;
        Eigen::Vector3d coarse, fine;
        double err;
    };
    auto evaluate = [&](double a, double b) {
        Panel p;
        p.a = a;
        p.b = b;
        p.coarse = Eigen::Vector3d::Zero();
        p.fine = Eigen::Vector3d::Zero();
        const double h = 0.5 * (b - a), m = 0.5 * (a + b);
        for (int i = 0; i < 7; ++i) p.coarse += h * w7[i] * angular_exact(rho, x, m + h * n7[i]);
        for (int i = 0; i < 15; ++i) p.fine += h * w15[i] * angular_exact(rho, x, m + h * n15[i]);
        p.err = (p.fine - p.coarse).norm();
        return p;
    };

    // Seed breakpoints where ball caps appear or disappear; the integrand
    // has kinks there.
    std::vector<double> cuts{0.0, rmax};
    for (const auto& c : rho.comps) {
        if (c.kind != RadialComponent::Kind::Ball) continue;
        const double d = (c.center - x).norm();
        for (double t : {std::abs(d - c.param), d + c.param})
            if (t > 0.0 && t < rmax) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Panel> panels;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) panels.push_back(evaluate(cuts[i], cuts[i + 1]));
    auto total = [&]() {
        Eigen::Vector3d v = Eigen::Vector3d::Zero();
        double e = 0.0;
        for (const auto& p : panels) {
            v += p.fine;
            e += p.err;
        }
        return std::pair<Eigen::Vector3d, double>(v, e);
    };
    while (static_cast<int>(panels.size()) < max_panels) {
        auto [v, e] = total();
        if (e <= rel_tol * std::max(1e-300, v.norm())) break;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        const Panel p = panels[worst];
        panels[worst] = evaluate(p.a, 0.5 * (p.a + p.b));
        panels.push_back(evaluate(0.5 * (p.a + p.b), p.b));
    }
    auto [v, e] = total();
    // F = -int omega rho dr.
    return QuadratureField{-v, e, static_cast<int>(panels.size())};
}

namespace {

std::uint64_t density_digest(const DensityModel& rho) {
    std::uint64_t d = 0xcbf29ce484222325ULL;
    for (const auto& c : rho.comps) {
        d = fnv1a_pod(static_cast<int>(c.kind), d);
        d = fnv1a(c.center.data(), 3 * sizeof(double), d);
        d = fnv1a_pod(c.param, d);
        d = fnv1a_pod(c.mass, d);
    }
    return d;
}

double loglip_rhs(const BoundConstants& bc, double sup, double delta, double R) {
    if (delta == 0.0) return 0.0;
    const double lp = std::max(0.0, std::log(R * R / (delta * delta)));
    return 8.0 * kPi * sup * delta * (bc.c + lp);
}

}  // namespace

Certificate loglip_field_certificate(const DensityModel& rho, const Eigen::Vector3d& x,
                                     const Eigen::Vector3d& y, bool use_quadrature,
                                     std::uint64_t seed) {
    const double sup = rho.sup_norm();
    const double l1 = rho.l1_mass();
    const BoundConstants bc = constants(1.0, sup, l1);
    const double delta = (x - y).norm();
    const double rhs = loglip_rhs(bc, sup, delta, bc.R);

    std::uint64_t digest = density_digest(rho);
    digest = fnv1a(x.data(), 3 * sizeof(double), digest);
    digest = fnv1a(y.data(), 3 * sizeof(double), digest);

    if (!use_quadrature) {
        const double lhs = (rho.field(x) - rho.field(y)).norm();
        return make_certificate("loglip_field", digest, rhs, lhs, 1e-12 * std::max(1.0, rhs),
                                "closed_form", seed);
    }
    int order = 12;
    double rel = 1e-8;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const QuadratureField fx = coulomb_field_quadrature(rho, x, rel, 4000, order);
        const QuadratureField fy = coulomb_field_quadrature(rho, y, rel, 4000, order);
        const double lhs = (fx.value - fy.value).norm();
        const double err = fx.error_estimate + fy.error_estimate;
        const double margin = rhs - lhs;
        if (err <= 0.01 * std::max(margin, 0.0)) {
            return make_certificate("loglip_field", digest, rhs, lhs + err,
                                    1e-12 * std::max(1.0, rhs),
                                    "quadrature err=" + std::to_string(err) +
                                        " refinements=" + std::to_string(attempt),
                                    seed);
        }
        order *= 2;  // one refinement level
        rel *= 1e-2;
    }
    const QuadratureField fx = coulomb_field_quadrature(rho, x, rel, 8000, order);
    const QuadratureField fy = coulomb_field_quadrature(rho, y, rel, 8000, order);
    const double lhs = (fx.value - fy.value).norm();
    return make_inconclusive("loglip_field", digest, rhs, lhs, 1e-12,
                             "quadrature error " +
                                 std::to_string(fx.error_estimate + fy.error_estimate) +
                                 " exceeds 1% of margin",
                             seed);
}

Certificate loglip2_integral_certificate(const DensityModel& rho,
                                         const std::vector<CouplingAtom>& gamma,
                                         bool use_quadrature, std::uint64_t seed) {
    const double sup = rho.sup_norm();
    const double l1 = rho.l1_mass();
    const BoundConstants bc = constants(1.0, sup, l1);
    const double C_inf = sup;  // unit coupling: C_inf >= ||rho||_inf
    double q_x = 0.0, lhs = 0.0, total_err = 0.0;

    std::uint64_t digest = density_digest(rho);
    for (const auto& atom : gamma) {
        digest = fnv1a(atom.x.data(), 3 * sizeof(double), digest);
        digest = fnv1a(atom.y.data(), 3 * sizeof(double), digest);
        digest = fnv1a_pod(atom.mass, digest);
        q_x += atom.mass * (atom.x - atom.y).squaredNorm();
        Eigen::Vector3d fx, fy;
        if (use_quadrature) {
            const auto qx = coulomb_field_quadrature(rho, atom.x);
            const auto qy = coulomb_field_quadrature(rho, atom.y);
            fx = qx.value;
            fy = qy.value;
            total_err += atom.mass * 2.0 * (fx - fy).norm() * (qx.error_estimate + qy.error_estimate);
        } else {
            fx = rho.field(atom.x);
            fy = rho.field(atom.y);
        }
        lhs += atom.mass * (fx - fy).squaredNorm();
    }
    if (q_x == 0.0) {
        return make_certificate("loglip2_integral", digest, 0.0, lhs, 1e-12,
                                "diagonal coupling", seed);
    }
    const double rhs = 4.0 * C_inf * C_inf * bc.R * bc.R * phi(bc, q_x / (bc.R * bc.R));
    const double margin = rhs - lhs;
    if (use_quadrature && total_err > 0.01 * std::max(margin, 0.0))
        return make_inconclusive("loglip2_integral", digest, rhs, lhs,
                                 1e-12 * std::max(1.0, rhs), "quadrature error too large", seed);
    return make_certificate("loglip2_integral", digest, rhs, lhs + total_err,
                            1e-12 * std::max(1.0, rhs),
                            use_quadrature ? "quadrature" : "closed_form", seed);
}

}  // namespace sctl

#include "sctl/gronwall.hpp"

#include <cmath>
#include <limits>

#include "sctl/comparison.hpp"
#include "sctl/errors.hpp"

namespace sctl {

CinfTrajectory CinfTrajectory::constant(double value, double t_end) {
    CinfTrajectory traj;
    traj.times.resize(2);
    traj.values.resize(2);
    traj.times << 0.0, t_end;
    traj.values << value, value;
    return traj;
}

void validate_trajectory(const CinfTrajectory& traj) {
    if (traj.times.size() != traj.values.size() || traj.times.size() < 1)
        throw InputError("CinfTrajectory: shape mismatch");
    if (traj.times[0] != 0.0) throw InputError("CinfTrajectory: must start at t = 0");
    for (int i = 1; i < traj.times.size(); ++i)
        if (!(traj.times[i] > traj.times[i - 1]))
            throw InputError("CinfTrajectory: times must be strictly increasing");
    if ((traj.values < 1.0).any())
        throw InputError("CinfTrajectory: C_inf < 1 violates its construction");
}

namespace {

double cinf_at(const CinfTrajectory& traj, double t) {
    int i = 0;
    while (i + 1 < traj.times.size() && traj.times[i + 1] <= t) ++i;
    return traj.values[i];
}

double integrate_sqrt(const CinfTrajectory& traj, double t, double factor) {
    double acc = 0.0;
    for (int i = 0; i < traj.times.size(); ++i) {
        const double a = traj.times[i];
        if (a >= t) break;
        const double b = (i + 1 < traj.times.size()) ? std::min<double>(traj.times[i + 1], t) : t;
        if (b > a) acc += std::sqrt(factor * traj.values[i]) * (b - a);
    }
    // Extend the last value beyond the sampled horizon.
    const double t_last = traj.times[traj.times.size() - 1];
    if (t > t_last) acc += std::sqrt(factor * traj.values[traj.values.size() - 1]) * (t - t_last);
    return acc;
}

}  // namespace

double lambda_lem(const CinfTrajectory& traj, double t) { return integrate_sqrt(traj, t, 2.0); }
double lambda_thm(const CinfTrajectory& traj, double t) { return integrate_sqrt(traj, t, 1.0); }

double lambda_lem_inverse(const CinfTrajectory& traj, double level) {
    if (level <= 0.0) return 0.0;
    double t = 0.0, acc = 0.0;
    const int n = static_cast<int>(traj.times.size());
    for (int i = 0; i < n; ++i) {
        const double a = traj.times[i];
        const double rate = std::sqrt(2.0 * traj.values[i]);
        const double b = (i + 1 < n) ? traj.times[i + 1] : std::numeric_limits<double>::infinity();
        const double seg = rate * (b - a);
        if (acc + seg >= level) return a + (level - acc) / rate;
        acc += seg;
        t = b;
    }
    return t;  // unreachable: last segment extends to infinity
}

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

double bound_impl(const BoundConstants& bc, double Q0, const CinfTrajectory& traj, double t,
                  double second_rate_sq) {
    if (!(Q0 > 0.0)) throw InputError("gronwall_bound: Q0 must be positive");
    validate_trajectory(traj);
    const double head = std::sqrt(pos(bc.c2 - std::log(Q0)));
    const double tau = lambda_lem_inverse(traj, pos(head - std::sqrt(bc.c2 + bc.y0)));
    const double lam_t = lambda_lem(traj, t);
    const double lam_tau = lambda_lem(traj, tau);
    const double lam1 = lambda_lem(traj, std::min(t, tau));
    const double lam2 = std::sqrt(second_rate_sq) * pos(lam_t - lam_tau) - 0.5 * lam1 * lam1;
    return Q0 * std::exp(2.0 * lam1 * head + 2.0 * lam2);
}

}  // namespace

double gronwall_bound(const BoundConstants& bc, double Q0, const CinfTrajectory& traj, double t) {
    return bound_impl(bc, Q0, traj, t, bc.c2 + bc.y0);
}

double gronwall_bound_paper_form(const BoundConstants& bc, double Q0, const CinfTrajectory& traj,
                                 double t) {
    if (!(Q0 > 0.0)) throw InputError("gronwall_bound: Q0 must be positive");
    validate_trajectory(traj);
    const double head = std::sqrt(pos(bc.c2 - std::log(Q0)));
    const double tau = lambda_lem_inverse(traj, pos(head - std::sqrt(bc.c2 + bc.y0)));
    const double lam_t = lambda_lem(traj, t);
    if (t < tau) {
        const double u = head - lam_t;
        return std::exp(-(u * u) + bc.c2);
    }
    const double lam_tau = lambda_lem(traj, tau);
    return std::max(bc.x0, Q0) * std::exp(2.0 * std::sqrt(bc.c2) * (lam_t - lam_tau));
}

double comparison_ode_rk4(const BoundConstants& bc, double Q0, const CinfTrajectory& traj,
                          double t_end, double dt) {
    if (!(Q0 > 0.0)) throw InputError("comparison_ode_rk4: Q0 must be positive");
    validate_trajectory(traj);
    // dQ/dt = Q (sqrt(lam) + ell(Q)/sqrt(lam)) with lam = ell(Q), which is
    // 2 Q sqrt(ell(Q)).
    auto rhs = [&](double q, double t) { return 2.0 * q * std::sqrt(ell(bc, q, cinf_at(traj, t))); };
    double q = Q0, t = 0.0;
    const int n = static_cast<int>(std::ceil(t_end / dt));
    const double h = t_end / n;
    for (int i = 0; i < n; ++i) {
        const double k1 = rhs(q, t);
        const double k2 = rhs(q + 0.5 * h * k1, t + 0.5 * h);
        const double k3 = rhs(q + 0.5 * h * k2, t + 0.5 * h);
        const double k4 = rhs(q + h * k3, t + h);
        q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return q;
}

double main_theorem_bound(double W_init, double eps, const CinfTrajectory& traj, double t) {
    if (!(eps > 0.0 && eps < 1.0)) throw InputError("main_theorem_bound: eps must lie in (0,1)");
    if (!(W_init > 0.0)) throw InputError("main_theorem_bound: W_init must be positive");
    validate_trajectory(traj);
    const double lam = lambda_thm(traj, t);
    const double lam_eps = 2.0 * lam + (1.0 - eps) * lam * lam / eps;
    const double pref = std::pow(cinf_at(traj, t), 1.0 / 6.0) * std::pow(traj.values[0], 1.0 / 3.0);
    const double head = std::max(5.0 / eps * std::pow(W_init, 1.0 - eps), 3.0 * W_init);
    return pref * head * std::exp(lam_eps);
}

double remark_hbar_constant(double C_init, double eps, const CinfTrajectory& traj, double t) {
    if (!(C_init > 0.0)) throw InputError("remark_hbar_constant: C_init must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw InputError("remark_hbar_constant: eps must lie in (0,1)");
    validate_trajectory(traj);
    const double lam = lambda_thm(traj, t);
    const double lam_eps = 2.0 * lam + (1.0 - eps) * lam * lam / eps;
    const double pref = std::pow(cinf_at(traj, t), 1.0 / 6.0) * std::pow(traj.values[0], 1.0 / 3.0);
    return pref * (5.0 / eps) * std::pow(C_init, 1.0 - eps) * std::exp(lam_eps);
}

ClassicalBound classical_bound(double eta, double C, double t) {
    if (!(eta > 0.0 && eta < 1.0)) throw InputError("classical_bound: eta must lie in (0,1)");
    ClassicalBound out;
    const double root = std::sqrt(std::abs(std::log(eta)));
    out.in_domain = root >= C * t;
    const double u = root - C * t;
    out.y = std::exp(-u * u);
    const double lny = -u * u;
    out.weighted_lhs = std::sqrt(1.0 + lny * lny) * out.y;
    out.c_t = 2.0 * C * t + 2.0;
    out.weighted_rhs = eta * std::exp(out.c_t * root);
    return out;
}

double classical_ode_rk4(double eta, double C, double t_end, double dt) {
    if (!(eta > 0.0 && eta < 1.0)) throw InputError("classical_ode_rk4: eta must lie in (0,1)");
    auto rhs = [&](double y) { return 2.0 * C * y * std::sqrt(std::abs(std::log(std::min(y, 1.0 - 1e-300)))); };
    double y = eta;
    const int n = static_cast<int>(std::ceil(t_end / dt));
    const double h = t_end / n;
    for (int i = 0; i < n; ++i) {
        const double k1 = rhs(y);
        const double k2 = rhs(y + 0.5 * h * k1);
        const double k3 = rhs(y + 0.5 * h * k2);
        const double k4 = rhs(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

}  // namespace sctl

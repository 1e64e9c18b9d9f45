#pragma once

#include <Eigen/Dense>

#include "sctl/constants.hpp"

namespace sctl {

// Sampled running density bound C_inf(t): value[i] holds on [times[i],
// times[i+1]) (piecewise constant, extended right).  Values must be >= 1 by
// construction of C_inf.
struct CinfTrajectory {
    Eigen::ArrayXd times;   // strictly increasing, times[0] == 0
    Eigen::ArrayXd values;  // same length

    static CinfTrajectory constant(double value, double t_end);
};

void validate_trajectory(const CinfTrajectory& traj);

// Lambda_lem(t) = integral_0^t sqrt(2 C_inf(s)) ds  (Gronwall lemma scaling)
// Lambda_thm(t) = integral_0^t sqrt(C_inf(s)) ds    (main theorem scaling)
// Kept as distinct named quantities; they differ by sqrt(2) only for
// constant trajectories.
double lambda_lem(const CinfTrajectory& traj, double t);
double lambda_thm(const CinfTrajectory& traj, double t);
// Inverse of lambda_lem; returns +inf if the level is never reached.
double lambda_lem_inverse(const CinfTrajectory& traj, double level);

// Explicit bound dominating the comparison ODE dQ/dt = 2 Q sqrt(ell(Q)):
//
//   Q(t) <= Q0 exp(2 Lambda1 sqrt((c2 - ln Q0)_+) + 2 Lambda2),
//   Lambda1 = Lambda(min(t, tau)),
//   Lambda2 = sqrt(c2 + y0) (Lambda(t) - Lambda(tau))_+ - Lambda1^2/2,
//   tau = Lambda^{-1}((sqrt((c2 - ln Q0)_+) - sqrt(c2 + y0))_+),
//
// with Lambda = Lambda_lem.  The second-branch rate is sqrt(c2 + y0): the
// comparison function satisfies 1 + 2 Psi(Y) <= 2 (c2 + y0) for Y <= y0 with
// equality at the branch point, so this constant is sharp there.  The
// source's printed display uses sqrt(c2) instead and is undominated by the
// ODE near Q = x0 (see gronwall_bound_paper_form and the erratum note).
double gronwall_bound(const BoundConstants& bc, double Q0, const CinfTrajectory& traj, double t);

// The raw piecewise form as printed:
//   Q(t) <= exp(-(sqrt((c2 - ln Q0)_+) - Lambda(t))^2 + c2)        t <  tau
//   Q(t) <= max(x0, Q0) exp(2 sqrt(c2) (Lambda(t) - Lambda(tau)))  t >= tau
// Reported for reference only.
double gronwall_bound_paper_form(const BoundConstants& bc, double Q0, const CinfTrajectory& traj,
                                 double t);

// RK4 integration of the comparison ODE dQ/dt = Q (sqrt(lambda) +
// ell(Q)/sqrt(lambda)) with the optimized lambda = ell(Q); the independent
// oracle the bound is certified against.
double comparison_ode_rk4(const BoundConstants& bc, double Q0, const CinfTrajectory& traj,
                          double t_end, double dt);

// Main-theorem stability bound:
//   C_inf(t)^{1/6} (C_inf(0))^{1/3} max((5/eps) W0^{1-eps}, 3 W0)
//     * exp(Lambda_eps(t)),
//   Lambda_eps(t) = 2 Lambda_thm(t) + (1-eps) Lambda_thm(t)^2 / eps.
double main_theorem_bound(double W_init, double eps, const CinfTrajectory& traj, double t);

// Corollary constant for the sqrt(hbar)^{1-eps} rate: with W_init <=
// C sqrt(hbar), the theorem gives W(t) <= C_{T,eps} sqrt(hbar)^{1-eps} where
// C_{T,eps} = C_inf^{1/6} C_inf0^{1/3} (5/eps) C^{1-eps} e^{Lambda_eps}.
double remark_hbar_constant(double C_init, double eps, const CinfTrajectory& traj, double t);

// Classical two-solution stability: closed form of the ODE
// dY/dt = 2 C Y sqrt(|ln Y|), Y(0) = eta, namely
// |ln Y| = (sqrt(|ln eta|) - C t)^2 while sqrt(|ln eta|) >= C t.
struct ClassicalBound {
    double y;             // Y(t)
    bool in_domain;       // sqrt(|ln eta|) >= C t
    double weighted_lhs;  // <ln Y> Y with <u> = sqrt(1 + u^2)
    double weighted_rhs;  // eta * exp(C_T sqrt(|ln eta|))
    double c_t;           // the constant in the weighted form, 2 C t + 2
};
ClassicalBound classical_bound(double eta, double C, double t);

// RK4 oracle for the classical ODE dY/dt = 2 C Y sqrt(|ln Y|).
double classical_ode_rk4(double eta, double C, double t_end, double dt);

}  // namespace sctl

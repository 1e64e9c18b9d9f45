#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sctl/certificate.hpp"
#include "sctl/sinkhorn.hpp"
#include "sctl/state.hpp"
#include "sctl/w2.hpp"

namespace sctl {

// The pseudometric floor: W_h(f, op)^2 >= d*hbar (3*hbar in the paper's
// d = 3 setting).
double wh_floor_sq(int d, double hbar);

struct WhOptions {
    int d = 1;                   // dimension entering the floor
    int exact_w2_cap = 250000;   // m*n cap for the exact W2 solve
    GridW2Options grid;          // entropic settings for grid-sized W2
    double toeplitz_resid_tol = 1e-8;
    double beta_tol = 1e-6;      // bisection tolerance for the PSD split
};

// Lower bound via the Husimi comparison:
//   W_h(f, op)^2 >= W_2(f, husimi(op))^2 - d*hbar,
// floored at d*hbar.  Signed (Wigner-kind) f is rejected; such inputs must
// be smoothed through the Husimi of their own Weyl quantization first.
struct WhLowerResult {
    double value = 0.0;
    double w2_sq_lower = 0.0;  // certified lower bound used
    std::string method;
};
WhLowerResult wh_lower(const PhaseField& f, const MixedState& op, const WhOptions& opts = {});

// Independent-coupling cost: W_h(f, op)^2 <= sum_z f(z) h^d Tr(c(z) op).
double product_coupling_cost(const PhaseField& f, const MixedState& op);

// Upper bound on W_h(f, op), the best of four certified routes:
//   1. exactly-Toeplitz: W_2(f, g) + sqrt(d hbar) when toeplitz(g) ~ op;
//   2. PSD split op = beta T_g + (1-beta) rem, combining the Toeplitz
//      inequality with the independent-coupling cost of the remainder;
//   3. the general Husimi-gradient bound
//      W_2(f, husimi(op)) + sqrt(d hbar + hbar^2 ||grad f_sqrt(op)||^2);
//   4. the plain independent-coupling cost.
// penalty reports the excess over W_2(f,g) + sqrt(d hbar); it is 0 for
// exactly-Toeplitz op.
struct WhUpperResult {
    double value = 0.0;
    double w2_term = 0.0;     // upper bound on W_2(f, g)
    double penalty = 0.0;
    double beta = 1.0;        // PSD fraction carried by the Toeplitz part
    double symbol_residual = 0.0;
    double grad_norm = 0.0;   // ||grad f_sqrt(op)||_L2 when that route wins
    std::string method;
};
WhUpperResult wh_upper_toeplitz(const PhaseField& f, const MixedState& op,
                                const WhOptions& opts = {});

// Desk-scale instance of the coupling problem: cells z_k = (x_k, v_k) with
// masses m_k summing to 1, against a MixedState on an N-point grid.
struct PhaseCell {
    double x = 0.0;
    double v = 0.0;
    double mass = 0.0;
};

struct SdpInstance {
    std::vector<PhaseCell> cells;
    MixedState op;
};

// Build the cells of an instance from the nonzero entries of a sparse
// probability field (values on its grid).
std::vector<PhaseCell> cells_from_field(const PhaseField& f, double mass_floor = 1e-14);

// One Hermitian PSD block per cell; Sum_k gamma_k = op and
// h^d tr(gamma_k) = m_k (blocks stored in the scaled convention
// Y_k = h^d X_k so that tr(Y_k) = m_k).
struct SemiclassicalCoupling {
    double hbar = 0.0;
    SpatialGrid space;
    std::vector<PhaseCell> cells;
    std::vector<Eigen::MatrixXcd> blocks;  // Y_k, N x N

    void validate(const MixedState& op, double tol = 1e-8) const;
};

struct WhEstimate {
    double hbar = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> exact;
    std::optional<double> gap;
    std::string method;
};

std::string to_json(const WhEstimate& est);

struct SdpOptions {
    int max_cells = 32;
    int max_grid = 16;
    double target_gap = 1e-5;  // absolute duality gap on the squared value
    int max_iters = 200000;
    double rho = 1.0;          // initial ADMM penalty (auto-balanced)
    int d = 1;
};

struct SdpResult {
    double value_sq = 0.0;       // primal objective at the feasible point
    double dual_sq = 0.0;        // certified dual lower bound
    double gap = 0.0;            // value_sq - dual_sq
    double psd_defect = 0.0;     // most negative eigenvalue of the blocks
    int iterations = 0;
    bool converged = true;       // gap target reached; else brackets only
    SemiclassicalCoupling coupling;
};

// First-order splitting (ADMM: affine projection + PSD cone projection)
// for the coupling problem
//   min sum_k tr(C_k Y_k),  C_k = |x_k - x|^2 + |v_k - p|^2,
//   s.t. tr(Y_k) = m_k, sum_k Y_k = h^d op, Y_k >= 0,
// with a shifted dual certificate for the reported gap.
SdpResult wh_exact_sdp(const SdpInstance& instance, const SdpOptions& opts = {});

// Convenience wrapper combining the three estimators on one instance.
WhEstimate wh_estimate(const PhaseField& f, const MixedState& op, bool run_sdp,
                       const WhOptions& opts = {}, const SdpOptions& sdp_opts = {});

// Certificate for the marginal comparison W_2(rho_f, rho_op) <= W_h bound.
Certificate marginal_w2_check(const PhaseField& f, const MixedState& op, const WhEstimate& est);

// Cost operator of a cell in the l2 matrix convention (multiplication
// operator for x, spectral momentum for p; minimal-image distances).
Eigen::MatrixXcd cell_cost_operator(const SpatialGrid& space, double hbar, double x_k, double v_k);

}  // namespace sctl

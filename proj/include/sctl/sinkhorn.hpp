#pragma once

#include <Eigen/Dense>
#include <string>

#include "sctl/state.hpp"

namespace sctl {

// Entropic W2 between two nonnegative mass arrays on a shared phase grid.
// The quadratic cost splits per axis, so every Sinkhorn contraction is two
// small matrix products; updates run in the log domain (max-factored), so
// arbitrarily small epsilon is safe.
//
// The returned estimate is the debiased Sinkhorn divergence clamped into a
// certified bracket: lower = dual value of an exactly feasible potential
// pair (via a full c-transform), upper = cost of an exactly feasible plan
// (marginal scaling plus rank-1 completion).
struct GridW2Options {
    double eps_start_factor = 1e-1;  // of the median squared distance
    double eps_final_factor = 1e-3;
    int eps_stages = 4;
    double target_bracket = 0.0;  // continue past the schedule until the
                                  // bracket is this tight (0 = schedule only)
    int max_extra_stages = 4;
    int max_iters_per_stage = 3000;
    double marginal_tol = 1e-9;  // L1 violation of the free marginal
    double overrelax = 1.6;      // Sinkhorn over-relaxation factor
    bool debias = true;
    double mass_floor = 1e-16;  // support threshold per cell
};

struct GridW2Result {
    double value = 0.0;     // W2 estimate (sqrt of cost estimate)
    double cost = 0.0;      // squared-cost estimate (debiased, clamped)
    double lower_sq = 0.0;  // certified duality bracket on the squared cost
    double upper_sq = 0.0;
    double eps_final = 0.0;
    int iterations = 0;
    bool converged = true;
    std::string method = "entropic_grid";
};

GridW2Result w2_grid_entropic(const PhaseField& mu, const PhaseField& nu,
                              const GridW2Options& opts = {});

}  // namespace sctl

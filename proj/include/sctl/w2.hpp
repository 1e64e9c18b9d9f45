#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "sctl/state.hpp"

namespace sctl {

// Weighted point cloud in R^dim.  Periodic dimensions carry their box
// length in `periodic_lengths` (0 = non-periodic); distances use the
// minimal image.
struct DiscreteMeasure {
    Eigen::MatrixXd points;   // n x dim
    Eigen::VectorXd weights;  // n, nonnegative, sums to 1
    Eigen::VectorXd periodic_lengths;  // dim entries, or empty for euclidean

    int size() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

DiscreteMeasure measure_from_density(const SpatialDensity& rho, bool periodic = true,
                                     double mass_floor = 1e-15);
DiscreteMeasure measure_from_field(const PhaseField& f, double mass_floor = 1e-15);

double squared_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int i, int j);

// Coupling between two discrete measures.
struct TransportPlan {
    DiscreteMeasure source;
    DiscreteMeasure target;
    Eigen::MatrixXd plan;  // m x n, nonnegative
    double cost = 0.0;     // sum plan_ij * |z_i - z_j|^2

    void validate(double tol = 1e-9) const;
};

void export_plan_csv(const std::string& path, const TransportPlan& plan);

struct W2Result {
    double value = 0.0;     // W2 distance (square root of cost)
    double cost = 0.0;      // squared value
    double lower_sq = 0.0;  // certified bracket on the squared cost
    double upper_sq = 0.0;
    std::optional<TransportPlan> plan;
    Eigen::VectorXd dual_u, dual_v;  // optimality certificate (exact mode)
    double duality_gap = 0.0;
    std::string method;
};

// Exact solver (transportation simplex / MODI) with a primal-dual
// optimality certificate.  Intended for site counts with m*n manageable
// densely.
W2Result w2_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Dispatcher: exact when m*n <= exact_cap, otherwise refuses (grid measures
// go through the entropic solver in sinkhorn.hpp).
W2Result w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int exact_cap = 250000);

// Exact 1D quantile solvers for spatial densities: on the line and on the
// periodic circle (optimal cut found by convex search over the rotation).
double w2_line_1d(const Eigen::ArrayXd& x_mu, const Eigen::ArrayXd& w_mu,
                  const Eigen::ArrayXd& x_nu, const Eigen::ArrayXd& w_nu);
double w2_circle_1d(const Eigen::ArrayXd& x_mu, const Eigen::ArrayXd& w_mu,
                    const Eigen::ArrayXd& x_nu, const Eigen::ArrayXd& w_nu, double circumference);
double w2_spatial(const SpatialDensity& mu, const SpatialDensity& nu, bool periodic = true);

}  // namespace sctl

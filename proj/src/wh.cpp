#include "sctl/wh.hpp"

#include <cmath>
#include <limits>
#include <vector>
#include <sstream>

#include <json.hpp>

#include "sctl/density.hpp"
#include "sctl/rng.hpp"
#include "sctl/fft.hpp"
#include "sctl/transforms.hpp"

namespace sctl {

double wh_floor_sq(int d, double hbar) { return d * hbar; }

namespace {

// Certified W2^2 bracket between two probability fields on a shared grid:
// exact when small enough, entropic otherwise.
struct W2Bracket {
    double lower_sq = 0.0;
    double upper_sq = 0.0;
    std::string method;
};

W2Bracket w2_fields(const PhaseField& a, const PhaseField& b, const WhOptions& opts) {
    const DiscreteMeasure ma = measure_from_field(a);
    const DiscreteMeasure mb = measure_from_field(b);
    W2Bracket out;
    if (static_cast<long>(ma.size()) * mb.size() <= opts.exact_w2_cap) {
        const W2Result r = w2_exact(ma, mb);
        out.lower_sq = std::min(r.lower_sq, r.cost);
        out.upper_sq = r.cost;
        out.method = r.method;
    } else {
        const GridW2Result r = w2_grid_entropic(a, b, opts.grid);
        out.lower_sq = r.lower_sq;
        out.upper_sq = r.upper_sq;
        out.method = r.method;
    }
    return out;
}

}  // namespace

WhLowerResult wh_lower(const PhaseField& f, const MixedState& op, const WhOptions& opts) {
    if (f.kind != FieldKind::Probability)
        throw InputError(
            "wh_lower: signed phase-space input; smooth it through the Husimi transform of its "
            "own Weyl quantization first");
    const PhaseField husimi = husimi_transform(op, f.grid.nv);
    if (!(husimi.grid == f.grid)) throw InputError("wh_lower: grid mismatch with Husimi transform");
    const W2Bracket w2 = w2_fields(f, husimi, opts);
    const double floor_sq = wh_floor_sq(opts.d, op.hbar);
    WhLowerResult res;
    res.w2_sq_lower = w2.lower_sq;
    res.value = std::sqrt(std::max(floor_sq, w2.lower_sq - floor_sq));
    res.method = "husimi_w2[" + w2.method + "]";
    return res;
}

double product_coupling_cost(const PhaseField& f, const MixedState& op) {
    const SpatialGrid& space = op.space;
    if (!(f.grid.space == space)) throw InputError("product_coupling_cost: grid mismatch");
    const SpatialDensity rho = spatial_density_quantum(op);

    // q2x(a) = integral wrap(x_a - x)^2 rho(x) dx.
    Eigen::ArrayXd q2x(space.nx);
    for (int a = 0; a < space.nx; ++a) {
        double acc = 0.0;
        for (int b = 0; b < space.nx; ++b) {
            const double s = space.wrap(space.x(a) - space.x(b));
            acc += s * s * rho.values[b];
        }
        q2x[a] = acc * space.dx();
    }
    // Total momentum distribution over the spectral grid.
    const Eigen::ArrayXd k = space.wavenumbers();
    Eigen::ArrayXd pdist = Eigen::ArrayXd::Zero(space.nx);
    for (int m = 0; m < op.rank(); ++m)
        pdist += op.weights[m] * momentum_occupation(space, op.vectors.col(m));
    pdist *= op.h();
    Eigen::ArrayXd q2v(f.grid.nv);
    for (int j = 0; j < f.grid.nv; ++j) {
        double acc = 0.0;
        for (int b = 0; b < space.nx; ++b) {
            const double s = f.grid.v(j) - op.hbar * k[b];
            acc += s * s * pdist[b];
        }
        q2v[j] = acc;
    }
    double cost = 0.0;
    const double vol = f.grid.cell_volume();
    for (int a = 0; a < f.grid.nx(); ++a)
        for (int j = 0; j < f.grid.nv; ++j)
            if (f.values(a, j) > 0.0) cost += f.values(a, j) * vol * (q2x[a] + q2v[j]);
    return cost;
}

namespace {

// Largest beta with op - beta T >= 0 (l2 matrix convention).  One
// generalized eigensolve of the pencil (T, op + tau I) gives the candidate
// 1/lambda_max, then a short bisection polish certifies it.
double psd_split_beta(const Eigen::MatrixXcd& op_mat, const Eigen::MatrixXcd& t_mat, double tol) {
    auto min_eig = [](const Eigen::MatrixXcd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        return es.eigenvalues().minCoeff();
    };
    if (min_eig(op_mat - t_mat) >= -1e-12) return 1.0;
    const int n = static_cast<int>(op_mat.rows());
    const double tau = 1e-13 * op_mat.diagonal().real().sum() / n;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(
        t_mat, op_mat + tau * Eigen::MatrixXcd::Identity(n, n));
    const double lmax = ges.eigenvalues().maxCoeff();
    double beta = lmax > 0.0 ? 1.0 / lmax : 1.0;
    beta = std::min(beta, 1.0);
    for (int it = 0; it < 60 && beta > 1e-12; ++it) {
        if (min_eig(op_mat - beta * t_mat) >= -1e-12 * std::max(1.0, beta)) break;
        beta *= (it < 6 ? 0.999 : 0.9);
    }
    if (min_eig(op_mat - beta * t_mat) < -1e-12) {
        double lo = 0.0, hi = beta;
        while (hi - lo > tol * std::max(1.0, hi)) {
            const double mid = 0.5 * (lo + hi);
            (min_eig(op_mat - mid * t_mat) >= -1e-12 ? lo : hi) = mid;
        }
        beta = lo;
    }
    return beta;
}

// Clip a symbol candidate to the region where the Husimi transform carries
// mass; spurious symbol mass outside the state's numerical range makes the
// PSD split collapse.
PhaseField clip_to_support(const PhaseField& g, const PhaseField& husimi, double rel_floor) {
    const double floor = rel_floor * husimi.values.maxCoeff();
    Eigen::ArrayXXd vals = g.values;
    for (int a = 0; a < vals.rows(); ++a)
        for (int j = 0; j < vals.cols(); ++j)
            if (husimi.values(a, j) < floor) vals(a, j) = 0.0;
    const double mass = field_mass(g.grid, vals);
    if (!(mass > 0.0)) return g;
    vals /= mass;
    return make_probability_field(g.grid, std::move(vals), MarginPolicy::Ignore);
}

}  // namespace

WhUpperResult wh_upper_toeplitz(const PhaseField& f, const MixedState& op, const WhOptions& opts) {
    if (f.kind != FieldKind::Probability)
        throw InputError("wh_upper_toeplitz: f must be a nonnegative probability field");
    const double floor = std::sqrt(wh_floor_sq(opts.d, op.hbar));

    const OperatorKernel op_kernel = to_kernel(op);
    const double dx = op.space.dx();
    const Eigen::MatrixXcd op_mat = op_kernel.k * dx;

    // Symbol candidates: Fourier deconvolution, support-clipped, and a
    // Richardson-Lucy positive refinement.  Each yields a certified
    // decomposition op = beta T_g + (1 - beta) rem; the candidate with
    // the best beta/rem combination gets the (expensive) W2 solve.
    const PhaseField husimi = husimi_transform(op, f.grid.nv);
    const SymbolResult sym = toeplitz_symbol(op, f.grid.nv);
    std::vector<std::pair<PhaseField, std::string>> candidates;
    candidates.emplace_back(clip_to_support(sym.symbol, husimi, 1e-9), "toeplitz");
    candidates.emplace_back(
        clip_to_support(richardson_lucy_symbol(op, sym.symbol, 40), husimi, 1e-9), "toeplitz_rl");

    const double product_direct = product_coupling_cost(f, op);

    struct Attempt {
        double beta = 0.0, rem_cost = 0.0, resid = 0.0;
        const PhaseField* g = nullptr;
        std::string method;
    };
    Attempt best;
    best.rem_cost = product_direct;
    for (auto& [g, name] : candidates) {
        Attempt at;
        at.g = &g;
        const OperatorKernel t_kernel = toeplitz_kernel(g, op.hbar);
        at.resid = scaled_hs_distance(t_kernel, op_kernel);
        if (at.resid <= opts.toeplitz_resid_tol) {
            at.beta = 1.0;
            at.method = name + "_exact";
        } else {
            const Eigen::MatrixXcd t_mat = t_kernel.k * dx;
            at.beta = psd_split_beta(op_mat, t_mat, opts.beta_tol);
            at.method = name + "_split";
            if (at.beta > 1e-9 && at.beta < 1.0 - 1e-12) {
                Eigen::MatrixXcd rem = (op_mat - at.beta * t_mat) / (1.0 - at.beta);
                OperatorKernel rem_kernel;
                rem_kernel.hbar = op.hbar;
                rem_kernel.space = op.space;
                rem_kernel.k = rem / dx;
                const MixedState rem_state = to_mixed_state(rem_kernel, 1e-4, 1e-14);
                at.rem_cost = product_coupling_cost(f, rem_state);
            } else if (at.beta <= 1e-9) {
                at.beta = 0.0;
                at.rem_cost = product_direct;
            }
        }
        const bool better = at.beta * (1.0 - std::min(1.0, at.rem_cost)) >
                                best.beta * (1.0 - std::min(1.0, best.rem_cost)) ||
                            (best.g == nullptr && at.beta > 0.0);
        if (better || at.beta > best.beta) best = at;
    }

    WhUpperResult res;
    double best_sq = product_direct;
    res.method = "product_coupling";
    if (best.g != nullptr && best.beta > 0.0) {
        const W2Bracket w2 = w2_fields(f, *best.g, opts);
        const double w2_ub = std::sqrt(std::max(0.0, w2.upper_sq));
        const double value_sq = best.beta * (w2_ub + floor) * (w2_ub + floor) +
                                (1.0 - best.beta) * best.rem_cost;
        if (value_sq < best_sq) {
            best_sq = value_sq;
            res.w2_term = w2_ub;
            res.beta = best.beta;
            res.symbol_residual = best.resid;
            res.method = best.method;
        }
    }
    // General route: W_2(f, husimi(op)) + sqrt(d hbar + hbar^2 D^2) with
    // D the phase-space gradient norm of the Wigner transform of sqrt(op)
    // (spectral convention).
    if (best.resid > opts.toeplitz_resid_tol || res.method == "product_coupling") {
        const double d_grad = sqrt_state_gradient_norm(op, f.grid.nv);
        const W2Bracket w2h = w2_fields(f, husimi, opts);
        const double w2h_ub = std::sqrt(std::max(0.0, w2h.upper_sq));
        const double val = w2h_ub + std::sqrt(wh_floor_sq(opts.d, op.hbar) +
                                              op.hbar * op.hbar * d_grad * d_grad);
        if (val * val < best_sq) {
            best_sq = val * val;
            res.w2_term = w2h_ub;
            res.beta = 0.0;
            res.grad_norm = d_grad;
            res.symbol_residual = best.resid;
            res.method = "husimi_grad_bound";
        }
    }
    res.value = std::sqrt(best_sq);
    res.penalty = std::max(0.0, res.value - res.w2_term - floor);
    return res;
}

std::vector<PhaseCell> cells_from_field(const PhaseField& f, double mass_floor) {
    std::vector<PhaseCell> cells;
    const double vol = f.grid.cell_volume();
    for (int a = 0; a < f.grid.nx(); ++a)
        for (int j = 0; j < f.grid.nv; ++j) {
            const double m = f.values(a, j) * vol;
            if (m > mass_floor) cells.push_back(PhaseCell{f.grid.x(a), f.grid.v(j), m});
        }
    return cells;
}

Eigen::MatrixXcd cell_cost_operator(const SpatialGrid& space, double hbar, double x_k, double v_k) {
    const int n = space.nx;
    Eigen::MatrixXcd cost = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        const double s = space.wrap(x_k - space.x(a));
        cost(a, a) = s * s;
    }
    // Unitary DFT matrix diagonalizing the momentum: p = F^dag diag(hbar k) F.
    Eigen::MatrixXcd dft(n, n);
    const double nrm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
            dft(j, a) = std::polar(nrm, -2.0 * kPi * j * a / n);
    const Eigen::ArrayXd k = space.wavenumbers();
    Eigen::VectorXd dp(n);
    for (int j = 0; j < n; ++j) {
        const double s = v_k - hbar * k[j];
        dp[j] = s * s;
    }
    cost += dft.adjoint() * dp.asDiagonal() * dft;
    return 0.5 * (cost + cost.adjoint()).eval();
}

void SemiclassicalCoupling::validate(const MixedState& op, double tol) const {
    if (blocks.size() != cells.size()) throw InputError("SemiclassicalCoupling: shape mismatch");
    const int n = space.nx;
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const double tr = blocks[k].diagonal().real().sum();
        if (std::abs(tr - cells[k].mass) > tol)
            throw InputError("SemiclassicalCoupling: block trace mismatch");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blocks[k]);
        if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, blocks[k].norm()))
            throw InputError("SemiclassicalCoupling: block not PSD");
        sum += blocks[k];
    }
    const Eigen::MatrixXcd target = to_kernel(op).k * op.space.dx() * planck(hbar);
    const double defect = (sum - target).norm() / std::max(1.0, target.norm());
    if (defect > tol) throw InputError("SemiclassicalCoupling: marginal sum defect " +
                                       std::to_string(defect));
}

SdpResult wh_exact_sdp(const SdpInstance& instance, const SdpOptions& opts) {
    const MixedState& op = instance.op;
    const int n = op.space.nx;
    const int n_cells = static_cast<int>(instance.cells.size());
    if (n > opts.max_grid)
        throw ResourceError("wh_exact_sdp: grid size " + std::to_string(n) + " exceeds cap");
    if (n_cells > opts.max_cells || n_cells == 0)
        throw ResourceError("wh_exact_sdp: cell count " + std::to_string(n_cells) + " exceeds cap");
    double total_mass = 0.0;
    for (const auto& c : instance.cells) total_mass += c.mass;
    if (std::abs(total_mass - 1.0) > 1e-9)
        throw InputError("wh_exact_sdp: cell masses must sum to 1");

    std::vector<Eigen::MatrixXcd> cost(n_cells);
    for (int k = 0; k < n_cells; ++k)
        cost[k] = cell_cost_operator(op.space, op.hbar, instance.cells[k].x, instance.cells[k].v);

    // Target marginal S = h^d * op (l2 matrix convention), tr S = 1.
    const Eigen::MatrixXcd target = to_kernel(op).k * op.space.dx() * planck(op.hbar);

    auto project_affine = [&](std::vector<Eigen::MatrixXcd>& y) {
        for (int k = 0; k < n_cells; ++k) {
            const double tr = y[k].diagonal().real().sum();
            y[k].diagonal().array() += (instance.cells[k].mass - tr) / n;
        }
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& m : y) sum += m;
        const Eigen::MatrixXcd corr = (target - sum) / n_cells;
        for (auto& m : y) m += corr;
    };
    auto project_psd = [&](Eigen::MatrixXcd& m, double* min_eig = nullptr) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
        if (min_eig) *min_eig = es.eigenvalues().minCoeff();
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    };

    std::vector<Eigen::MatrixXcd> x(n_cells), z(n_cells), u(n_cells);
    for (int k = 0; k < n_cells; ++k) {
        x[k] = instance.cells[k].mass * Eigen::MatrixXcd::Identity(n, n) / n;
        z[k] = x[k];
        u[k] = Eigen::MatrixXcd::Zero(n, n);
    }
    project_affine(x);
    z = x;

    double rho = opts.rho;
    SdpResult res;

    auto dual_certificate = [&](double* dual_value) {
        // Fit C_k + rho U_k ~ mu_k I + Lambda, then shift mu down until
        // mu_k I + Lambda <= C_k blockwise; the shifted pair is dual
        // feasible and certifies the reported gap.
        std::vector<double> mu(n_cells, 0.0);
        Eigen::MatrixXcd lambda = Eigen::MatrixXcd::Zero(n, n);
        for (int sweep = 0; sweep < 4; ++sweep) {
            lambda.setZero();
            for (int k = 0; k < n_cells; ++k)
                lambda += cost[k] + rho * u[k] - mu[k] * Eigen::MatrixXcd::Identity(n, n);
            lambda /= n_cells;
            for (int k = 0; k < n_cells; ++k)
                mu[k] = (cost[k] + rho * u[k] - lambda).diagonal().real().sum() / n;
        }
        lambda = 0.5 * (lambda + lambda.adjoint()).eval();
        double value = 0.0;
        for (int k = 0; k < n_cells; ++k) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                cost[k] - lambda - mu[k] * Eigen::MatrixXcd::Identity(n, n));
            const double shift = std::min(0.0, es.eigenvalues().minCoeff());
            value += (mu[k] + shift) * instance.cells[k].mass;
        }
        value += (lambda * target).trace().real();
        *dual_value = value;
    };

    double primal = 0.0, dual = -1e300;
    int it = 0;
    const int check_every = 50;
    for (; it < opts.max_iters; ++it) {
        // x-update: affine projection of (z - u - C/rho).
        for (int k = 0; k < n_cells; ++k) x[k] = z[k] - u[k] - cost[k] / rho;
        project_affine(x);
        // z-update: PSD projection of (x + u).
        double prim_res = 0.0, dual_res = 0.0;
        for (int k = 0; k < n_cells; ++k) {
            Eigen::MatrixXcd znew = x[k] + u[k];
            project_psd(znew);
            dual_res += (znew - z[k]).squaredNorm();
            z[k] = std::move(znew);
            u[k] += x[k] - z[k];
            prim_res += (x[k] - z[k]).squaredNorm();
        }
        if ((it + 1) % check_every == 0) {
            // Evaluate a feasible-side primal (affine-projected z) and the
            // shifted dual certificate.
            std::vector<Eigen::MatrixXcd> feas = z;
            project_affine(feas);
            double p = 0.0, defect = 0.0;
            for (int k = 0; k < n_cells; ++k) {
                p += (cost[k] * feas[k]).trace().real();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(feas[k]);
                defect = std::min(defect, es.eigenvalues().minCoeff());
            }
            double d = 0.0;
            dual_certificate(&d);
            primal = p;
            dual = std::max(dual, d);
            res.psd_defect = defect;
            if (primal - dual <= opts.target_gap && defect >= -1e-9) {
                res.converged = true;
                ++it;
                break;
            }
            // Residual balancing keeps the splitting well conditioned.
            if (prim_res > 25.0 * dual_res)
                rho *= 2.0;
            else if (dual_res > 25.0 * prim_res)
                rho *= 0.5;
        }
    }
    res.iterations = it;
    res.value_sq = primal;
    res.dual_sq = dual;
    res.gap = primal - dual;
    res.converged = res.gap <= opts.target_gap;

    std::vector<Eigen::MatrixXcd> feas = z;
    project_affine(feas);
    res.coupling.hbar = op.hbar;
    res.coupling.space = op.space;
    res.coupling.cells = instance.cells;
    res.coupling.blocks = std::move(feas);
    return res;
}

WhEstimate wh_estimate(const PhaseField& f, const MixedState& op, bool run_sdp,
                       const WhOptions& opts, const SdpOptions& sdp_opts) {
    WhEstimate est;
    est.hbar = op.hbar;
    const WhLowerResult lo = wh_lower(f, op, opts);
    const WhUpperResult hi = wh_upper_toeplitz(f, op, opts);
    est.lower = lo.value;
    est.upper = hi.value;
    est.method = lo.method + "+" + hi.method;
    if (run_sdp) {
        SdpInstance inst{cells_from_field(f), op};
        const SdpResult sdp = wh_exact_sdp(inst, sdp_opts);
        est.exact = std::sqrt(std::max(0.0, sdp.value_sq));
        est.gap = sdp.gap;
        est.method += "+sdp";
    }
    return est;
}

std::string to_json(const WhEstimate& est) {
    nlohmann::json j;
    j["hbar"] = est.hbar;
    j["lower"] = est.lower;
    j["upper"] = est.upper;
    if (est.exact) j["exact"] = *est.exact;
    if (est.gap) j["gap"] = *est.gap;
    j["method"] = est.method;
    return j.dump(2);
}

Certificate marginal_w2_check(const PhaseField& f, const MixedState& op, const WhEstimate& est) {
    SpatialDensity rho_f = spatial_density_classical(f);
    SpatialDensity rho_op = spatial_density_quantum(op);
    const double w2 = w2_spatial(rho_f, rho_op, /*periodic=*/true);
    const double bound = est.exact ? std::min(est.upper, *est.exact) : est.upper;
    std::uint64_t digest = fnv1a_pod(op.hbar);
    digest = fnv1a(f.values.data(), sizeof(double) * f.values.size(), digest);
    std::ostringstream notes;
    notes << "W2(rho_f,rho)=" << w2 << " vs W_h bound " << bound << " (method " << est.method
          << ")";
    return make_certificate("position_vs_kinetic_w2", digest, bound, w2, 1e-9, notes.str());
}

}  // namespace sctl

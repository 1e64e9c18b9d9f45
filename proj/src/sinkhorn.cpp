#include "sctl/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <cstdio>
#include <cstdlib>

#include "sctl/rng.hpp"

namespace sctl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct GridProblem {
    int nx, nb;        // x count, cropped v count
    int v0;            // crop offset in v
    Eigen::ArrayXd xs, vs;
    Eigen::MatrixXd cx, cv;       // per-axis squared distances
    Eigen::ArrayXXd mu, nu;       // cell masses on the cropped window
    Eigen::ArrayXXd log_mu, log_nu;
    double median_c = 1.0;
};

GridProblem build_problem(const PhaseField& a, const PhaseField& b, double mass_floor) {
    if (!(a.grid == b.grid)) throw InputError("w2_grid_entropic: grid mismatch");
    const PhaseGrid& g = a.grid;
    const double vol = g.cell_volume();

    // Crop the velocity axis to the joint support band (the x axis is
    // periodic and usually fully occupied).
    int lo = g.nv, hi = -1;
    for (int j = 0; j < g.nv; ++j) {
        const double m = a.values.col(j).maxCoeff() * vol;
        const double n = b.values.col(j).maxCoeff() * vol;
        if (m > mass_floor || n > mass_floor) {
            lo = std::min(lo, j);
            hi = std::max(hi, j);
        }
    }
    if (hi < lo) throw InputError("w2_grid_entropic: empty measures");
    lo = std::max(0, lo - 1);
    hi = std::min(g.nv - 1, hi + 1);

    GridProblem p;
    p.nx = g.nx();
    p.nb = hi - lo + 1;
    p.v0 = lo;
    p.xs = g.space.nodes();
    p.vs.resize(p.nb);
    for (int j = 0; j < p.nb; ++j) p.vs[j] = g.v(lo + j);

    p.cx.resize(p.nx, p.nx);
    for (int i = 0; i < p.nx; ++i)
        for (int k = 0; k < p.nx; ++k) {
            const double s = g.space.wrap(p.xs[i] - p.xs[k]);
            p.cx(i, k) = s * s;
        }
    p.cv.resize(p.nb, p.nb);
    for (int i = 0; i < p.nb; ++i)
        for (int k = 0; k < p.nb; ++k) {
            const double s = p.vs[i] - p.vs[k];
            p.cv(i, k) = s * s;
        }

    auto crop = [&](const Eigen::ArrayXXd& v) {
        Eigen::ArrayXXd out(p.nx, p.nb);
        for (int j = 0; j < p.nb; ++j) out.col(j) = v.col(lo + j) * vol;
        out = (out < mass_floor).select(0.0, out);
        return out;
    };
    p.mu = crop(a.values);
    p.nu = crop(b.values);
    p.mu /= p.mu.sum();
    p.nu /= p.nu.sum();
    auto safe_log = [](const Eigen::ArrayXXd& v) {
        return (v > 0.0).select(v.log(), kNegInf).eval();
    };
    p.log_mu = safe_log(p.mu);
    p.log_nu = safe_log(p.nu);

    // Median squared distance over support pairs (deterministic sample).
    std::vector<std::pair<int, int>> supp;
    for (int i = 0; i < p.nx; ++i)
        for (int j = 0; j < p.nb; ++j)
            if (p.mu(i, j) > 0.0 || p.nu(i, j) > 0.0) supp.emplace_back(i, j);
    auto rng = substream(0x51e0001ULL, 0);
    std::uniform_int_distribution<std::size_t> pick(0, supp.size() - 1);
    std::vector<double> sample;
    for (int k = 0; k < 20001; ++k) {
        const auto [i1, j1] = supp[pick(rng)];
        const auto [i2, j2] = supp[pick(rng)];
        sample.push_back(p.cx(i1, i2) + p.cv(j1, j2));
    }
    std::nth_element(sample.begin(), sample.begin() + sample.size() / 2, sample.end());
    p.median_c = std::max(sample[sample.size() / 2], 1e-12);
    return p;
}

// H(z) = eps * ln sum_{z'} exp((G(z') - c(z,z'))/eps).  Each axis
// contraction shifts by the max of the *combined* exponent per target, so
// contributions stay representable at any eps (a kernel-matrix product
// would underflow the far-field terms long before they become negligible
// relative to the per-target max).
struct Applier {
    const GridProblem& p;
    double eps;

    Applier(const GridProblem& p_, double eps_) : p(p_), eps(eps_) {}

    // One axis: out(t, k) = eps * ln sum_s exp((in(s, k) - c(s, t))/eps),
    // optionally also the conditional cost moment sum_s w(s,t) * extra(s,k)
    // with w the softmax weights (used for plan-cost evaluation).
    static void contract_axis(const Eigen::MatrixXd& c, const Eigen::ArrayXXd& in, double eps,
                              Eigen::ArrayXXd& out, const Eigen::ArrayXXd* extra_in = nullptr,
                              Eigen::ArrayXXd* extra_out = nullptr) {
        const int ns = static_cast<int>(in.rows());
        const int nt = static_cast<int>(c.cols());
        const int nk = static_cast<int>(in.cols());
        out.resize(nt, nk);
        if (extra_out) extra_out->resize(nt, nk);
        Eigen::ArrayXd expo(ns), w(ns);
        for (int t = 0; t < nt; ++t) {
            const auto cc = c.col(t).array();
            for (int k = 0; k < nk; ++k) {
                expo = in.col(k) - cc;
                const double m = expo.maxCoeff();
                if (!std::isfinite(m)) {
                    out(t, k) = kNegInf;
                    if (extra_out) (*extra_out)(t, k) = 0.0;
                    continue;
                }
                w = ((expo - m) / eps).exp();
                const double z = w.sum();
                out(t, k) = m + eps * std::log(z);
                if (extra_out) {
                    double acc = 0.0;
                    for (int s = 0; s < ns; ++s)
                        if (w[s] > 0.0) acc += w[s] * (cc[s] + (extra_in ? (*extra_in)(s, k) : 0.0));
                    (*extra_out)(t, k) = acc / z;
                }
            }
        }
    }

    // G is indexed (x', v'); contract v' against cv, then x' against cx.
    Eigen::ArrayXXd apply(const Eigen::ArrayXXd& g) const {
        // Pass 1 treats rows x' as batch: transpose so the contracted axis
        // is the leading one.
        Eigen::ArrayXXd gt = g.transpose();  // (v', x')
        Eigen::ArrayXXd a;                   // (v, x')
        contract_axis(p.cv, gt, eps, a);
        Eigen::ArrayXXd at = a.transpose();  // (x', v)
        Eigen::ArrayXXd h;                   // (x, v)
        contract_axis(p.cx, at, eps, h);
        return h;
    }

    // Conditional mean cost <c>_z under the softmax kernel e^{(G - c)/eps}.
    Eigen::ArrayXXd mean_cost(const Eigen::ArrayXXd& g) const {
        Eigen::ArrayXXd gt = g.transpose();
        Eigen::ArrayXXd a, cv_mean;
        contract_axis(p.cv, gt, eps, a, nullptr, &cv_mean);
        Eigen::ArrayXXd at = a.transpose();
        Eigen::ArrayXXd cvt = cv_mean.transpose();
        Eigen::ArrayXXd h, c_mean;
        contract_axis(p.cx, at, eps, h, &cvt, &c_mean);
        return c_mean;
    }
};

// Exact c-transform: out(z') = min_{z in supp} (c(z,z') - phi(z)).
Eigen::ArrayXXd c_transform(const GridProblem& p, const Eigen::ArrayXXd& phi,
                            const Eigen::ArrayXXd& supp_mask) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    Eigen::ArrayXXd a(p.nx, p.nb);  // a(x, v') = min_v (cv(v,v') - phi(x,v))
    a.setConstant(kInf);
    for (int x = 0; x < p.nx; ++x)
        for (int v = 0; v < p.nb; ++v) {
            if (!(supp_mask(x, v) > 0.0)) continue;
            const double f = phi(x, v);
            for (int vp = 0; vp < p.nb; ++vp) a(x, vp) = std::min(a(x, vp), p.cv(v, vp) - f);
        }
    Eigen::ArrayXXd out(p.nx, p.nb);
    out.setConstant(kInf);
    for (int xp = 0; xp < p.nx; ++xp)
        for (int x = 0; x < p.nx; ++x) {
            const double cxx = p.cx(x, xp);
            for (int vp = 0; vp < p.nb; ++vp)
                out(xp, vp) = std::min(out(xp, vp), cxx + a(x, vp));
        }
    return out;
}

double masked_dot(const Eigen::ArrayXXd& w, const Eigen::ArrayXXd& f) {
    double acc = 0.0;
    for (int i = 0; i < w.rows(); ++i)
        for (int j = 0; j < w.cols(); ++j)
            if (w(i, j) > 0.0) acc += w(i, j) * f(i, j);
    return acc;
}

struct SolveState {
    Eigen::ArrayXXd f, g;
    int iterations = 0;
    bool converged = false;
};

// Balanced Sinkhorn at fixed eps; warm-started potentials.
void solve_eps(const GridProblem& p, const Applier& ap, SolveState& st, double marginal_tol,
               int max_iters, double overrelax) {
    const double eps = ap.eps;
    double last_err = -1.0;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::ArrayXXd hg = ap.apply(st.g);
        // mu-marginal violation of the current plan.
        double err = 0.0;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j) {
                const double r =
                    p.mu(i, j) > 0.0 ? std::exp((st.f(i, j) + hg(i, j)) / eps) : 0.0;
                err += std::abs(r - p.mu(i, j));
            }
        last_err = err;
        if (err < marginal_tol && it > 0) {
            st.converged = true;
            st.iterations += it;
            if (getenv("SCTL_SINKHORN_DEBUG"))
                fprintf(stderr, "[stage eps=%.4e] converged it=%d err=%.3e\n", eps, it, err);
            return;
        }
        const double th = it == 0 ? 1.0 : overrelax;
        st.f = (p.mu > 0.0).select((1.0 - th) * st.f + th * (eps * p.log_mu - hg), kNegInf);
        const Eigen::ArrayXXd hf = ap.apply(st.f);
        st.g = (p.nu > 0.0).select((1.0 - th) * st.g + th * (eps * p.log_nu - hf), kNegInf);
        if (!((p.mu > 0.0).select(st.f, 0.0)).isFinite().all())
            throw ConvergenceError("w2_grid_entropic: potential diverged (disjoint supports?)");
    }
    st.iterations += max_iters;
    st.converged = false;
    if (getenv("SCTL_SINKHORN_DEBUG")) {
        double fmax = -1e308, gmax = -1e308; int bad = 0;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j) {
                if (p.mu(i, j) > 0.0) { fmax = std::max(fmax, std::abs(st.f(i,j))); if (!std::isfinite(st.f(i,j))) ++bad; }
                if (p.nu(i, j) > 0.0) { gmax = std::max(gmax, std::abs(st.g(i,j))); if (!std::isfinite(st.g(i,j))) ++bad; }
            }
        fprintf(stderr, "[stage eps=%.4e] CAP err=%.3e fmax=%.3e gmax=%.3e nonfinite=%d\n",
                eps, last_err, fmax, gmax, bad);
    }
}

// Symmetric potential for the debiasing terms OT_eps(w, w).
double symmetric_value(const GridProblem& p, const Applier& ap, const Eigen::ArrayXXd& w,
                       const Eigen::ArrayXXd& log_w, int max_iters = 300) {
    const double eps = ap.eps;
    Eigen::ArrayXXd f = (w > 0.0).select(Eigen::ArrayXXd::Zero(w.rows(), w.cols()), kNegInf);
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::ArrayXXd h = ap.apply(f);
        Eigen::ArrayXXd fn = (w > 0.0).select(0.5 * (f + eps * log_w - h), kNegInf);
        double delta = 0.0;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                if (w(i, j) > 0.0) delta = std::max(delta, std::abs(fn(i, j) - f(i, j)));
        f = std::move(fn);
        if (delta < 1e-12 * eps + 1e-15) break;
    }
    return 2.0 * masked_dot(w, f);
}

}  // namespace

GridW2Result w2_grid_entropic(const PhaseField& mu_f, const PhaseField& nu_f,
                              const GridW2Options& opts) {
    const GridProblem p = build_problem(mu_f, nu_f, opts.mass_floor);
    GridW2Result res;

    SolveState st;
    st.f = (p.mu > 0.0).select(Eigen::ArrayXXd::Zero(p.nx, p.nb), kNegInf);
    st.g = (p.nu > 0.0).select(Eigen::ArrayXXd::Zero(p.nx, p.nb), kNegInf);

    std::vector<double> ladder;
    for (int s = 0; s < opts.eps_stages; ++s) {
        const double t = opts.eps_stages == 1 ? 1.0 : static_cast<double>(s) / (opts.eps_stages - 1);
        ladder.push_back(p.median_c * opts.eps_start_factor *
                         std::pow(opts.eps_final_factor / opts.eps_start_factor, t));
    }

    double eps = ladder.back();
    for (double e : ladder) {
        const Applier ap(p, e);
        solve_eps(p, ap, st, opts.marginal_tol, opts.max_iters_per_stage, opts.overrelax);
        eps = e;
    }

    auto finalize = [&](double e) {
        const Applier ap(p, e);
        // Certified dual lower bound: exact c-transform of the final f.
        const Eigen::ArrayXXd mask_mu = (p.mu > 0.0).cast<double>();
        const Eigen::ArrayXXd fc = c_transform(p, st.f, mask_mu);
        double lb = masked_dot(p.mu, st.f) + masked_dot(p.nu, fc);

        // Certified feasible plan: marginal scaling + rank-1 completion.
        Eigen::ArrayXXd hg = ap.apply(st.g);
        Eigen::ArrayXXd row(p.nx, p.nb);
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                row(i, j) = p.mu(i, j) > 0.0 ? std::exp((st.f(i, j) + hg(i, j)) / e) : 0.0;
        Eigen::ArrayXXd f1 = st.f;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                if (p.mu(i, j) > 0.0 && row(i, j) > p.mu(i, j))
                    f1(i, j) += e * std::log(p.mu(i, j) / row(i, j));
        const Eigen::ArrayXXd hf1 = ap.apply(f1);
        Eigen::ArrayXXd col(p.nx, p.nb);
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                col(i, j) = p.nu(i, j) > 0.0 ? std::exp((st.g(i, j) + hf1(i, j)) / e) : 0.0;
        Eigen::ArrayXXd g1 = st.g;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                if (p.nu(i, j) > 0.0 && col(i, j) > p.nu(i, j))
                    g1(i, j) += e * std::log(p.nu(i, j) / col(i, j));
        const Eigen::ArrayXXd hg1 = ap.apply(g1);
        Eigen::ArrayXXd row2(p.nx, p.nb);
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j)
                row2(i, j) = p.mu(i, j) > 0.0 ? std::exp((f1(i, j) + hg1(i, j)) / e) : 0.0;
        const Eigen::ArrayXXd col2 = col.min(p.nu);
        Eigen::ArrayXXd err_r = (p.mu - row2).max(0.0);
        Eigen::ArrayXXd err_c = (p.nu - col2).max(0.0);
        const Eigen::ArrayXXd cost_cond = ap.mean_cost(g1);
        double plan_cost = 0.0;
        for (int i = 0; i < p.nx; ++i)
            for (int j = 0; j < p.nb; ++j) plan_cost += row2(i, j) * cost_cond(i, j);
        const double delta = err_r.sum();
        double rank1 = 0.0;
        if (delta > 1e-300) {
            const Eigen::ArrayXd erx = err_r.rowwise().sum(), ecx = err_c.rowwise().sum();
            const Eigen::ArrayXd erv = err_r.colwise().sum().transpose(),
                                 ecv = err_c.colwise().sum().transpose();
            rank1 += (erx.matrix().transpose() * p.cx * ecx.matrix())(0, 0);
            rank1 += (erv.matrix().transpose() * p.cv * ecv.matrix())(0, 0);
            rank1 /= delta;
        }
        double ub = plan_cost + rank1;

        // Debiased Sinkhorn divergence as the point estimate.
        double est = masked_dot(p.mu, st.f) + masked_dot(p.nu, st.g);
        if (opts.debias) {
            est -= 0.5 * symmetric_value(p, ap, p.mu, p.log_mu);
            est -= 0.5 * symmetric_value(p, ap, p.nu, p.log_nu);
        }
        res.lower_sq = std::max(lb, 0.0);
        res.upper_sq = std::max(ub, res.lower_sq);
        res.cost = std::min(std::max(est, res.lower_sq), res.upper_sq);
    };

    finalize(eps);
    int extra = 0;
    while (opts.target_bracket > 0.0 && res.upper_sq - res.lower_sq > opts.target_bracket &&
           extra < opts.max_extra_stages) {
        eps /= 4.0;
        const Applier ap(p, eps);
        solve_eps(p, ap, st, opts.marginal_tol, opts.max_iters_per_stage, opts.overrelax);
        finalize(eps);
        ++extra;
    }

    res.eps_final = eps;
    res.iterations = st.iterations;
    res.converged = st.converged;
    res.value = std::sqrt(std::max(res.cost, 0.0));
    return res;
}

}  // namespace sctl

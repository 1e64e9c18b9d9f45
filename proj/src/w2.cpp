#include "sctl/w2.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

namespace sctl {

DiscreteMeasure measure_from_density(const SpatialDensity& rho, bool periodic, double mass_floor) {
    std::vector<int> keep;
    for (int a = 0; a < rho.grid.nx; ++a)
        if (rho.values[a] * rho.grid.dx() > mass_floor) keep.push_back(a);
    DiscreteMeasure m;
    m.points.resize(keep.size(), 1);
    m.weights.resize(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        m.points(k, 0) = rho.grid.x(keep[k]);
        m.weights[k] = rho.values[keep[k]] * rho.grid.dx();
    }
    m.weights /= m.weights.sum();
    if (periodic) {
        m.periodic_lengths.resize(1);
        m.periodic_lengths[0] = rho.grid.length();
    }
    return m;
}

DiscreteMeasure measure_from_field(const PhaseField& f, double mass_floor) {
    std::vector<std::pair<int, int>> keep;
    const double vol = f.grid.cell_volume();
    for (int a = 0; a < f.grid.nx(); ++a)
        for (int j = 0; j < f.grid.nv; ++j)
            if (f.values(a, j) * vol > mass_floor) keep.emplace_back(a, j);
    DiscreteMeasure m;
    m.points.resize(keep.size(), 2);
    m.weights.resize(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        m.points(k, 0) = f.grid.x(keep[k].first);
        m.points(k, 1) = f.grid.v(keep[k].second);
        m.weights[k] = f.values(keep[k].first, keep[k].second) * vol;
    }
    m.weights /= m.weights.sum();
    m.periodic_lengths.resize(2);
    m.periodic_lengths[0] = f.grid.space.length();
    m.periodic_lengths[1] = 0.0;  // velocity axis is a truncation, not a torus
    return m;
}

double squared_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int i, int j) {
    double acc = 0.0;
    for (int d = 0; d < mu.dim(); ++d) {
        double s = mu.points(i, d) - nu.points(j, d);
        const double L = mu.periodic_lengths.size() > 0 ? mu.periodic_lengths[d] : 0.0;
        if (L > 0.0) {
            s = std::fmod(s, L);
            if (s < -0.5 * L) s += L;
            if (s >= 0.5 * L) s -= L;
        }
        acc += s * s;
    }
    return acc;
}

void TransportPlan::validate(double tol) const {
    if (plan.rows() != source.size() || plan.cols() != target.size())
        throw InputError("TransportPlan: shape mismatch");
    if ((plan.array() < -1e-12).any()) throw InputError("TransportPlan: negative entry");
    const Eigen::VectorXd row = plan.rowwise().sum();
    const Eigen::VectorXd col = plan.colwise().sum().transpose();
    if ((row - source.weights).cwiseAbs().maxCoeff() > tol)
        throw InputError("TransportPlan: row marginal violation");
    if ((col - target.weights).cwiseAbs().maxCoeff() > tol)
        throw InputError("TransportPlan: column marginal violation");
    double c = 0.0;
    for (int i = 0; i < source.size(); ++i)
        for (int j = 0; j < target.size(); ++j)
            if (plan(i, j) > 0.0) c += plan(i, j) * squared_distance(source, target, i, j);
    if (std::abs(c - cost) > 1e-12 + 1e-12 * std::abs(c))
        throw InputError("TransportPlan: cached cost mismatch");
}

void export_plan_csv(const std::string& path, const TransportPlan& plan) {
    std::ofstream os(path);
    if (!os) throw InputError("export_plan_csv: cannot open " + path);
    os.precision(17);
    os << "i,j,mass\n";
    for (int i = 0; i < plan.plan.rows(); ++i)
        for (int j = 0; j < plan.plan.cols(); ++j)
            if (plan.plan(i, j) > 0.0) os << i << ',' << j << ',' << plan.plan(i, j) << '\n';
}

namespace {

// Transportation simplex (MODI) on the dense cost matrix.  The basis is a
// spanning tree over row nodes 0..m-1 and column nodes m..m+n-1.
struct Simplex {
    int m, n;
    Eigen::MatrixXd c;
    Eigen::VectorXd a, b;
    Eigen::MatrixXd x;                       // flows on basic cells
    std::vector<std::vector<int>> adj;       // tree adjacency (node -> nodes)
    Eigen::VectorXd u, v;

    Simplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
            const Eigen::VectorXd& demand)
        : m(static_cast<int>(supply.size())),
          n(static_cast<int>(demand.size())),
          c(cost),
          a(supply),
          b(demand) {
        x = Eigen::MatrixXd::Constant(m, n, -1.0);  // -1 = nonbasic
        adj.assign(m + n, {});
        northwest();
        u.resize(m);
        v.resize(n);
    }

    void set_basic(int i, int j, double flow) {
        if (x(i, j) < 0.0) {
            adj[i].push_back(m + j);
            adj[m + j].push_back(i);
        }
        x(i, j) = flow;
    }

    void drop_basic(int i, int j) {
        x(i, j) = -1.0;
        auto& ri = adj[i];
        ri.erase(std::find(ri.begin(), ri.end(), m + j));
        auto& cj = adj[m + j];
        cj.erase(std::find(cj.begin(), cj.end(), i));
    }

    void northwest() {
        Eigen::VectorXd ra = a, rb = b;
        int i = 0, j = 0;
        while (i < m && j < n) {
            const double f = std::min(ra[i], rb[j]);
            set_basic(i, j, f);
            ra[i] -= f;
            rb[j] -= f;
            // Advance one side only so the basis stays a tree with exactly
            // m + n - 1 cells even under degeneracy.
            if (i == m - 1 && j == n - 1) break;
            if ((ra[i] <= rb[j] && i < m - 1) || j == n - 1)
                ++i;
            else
                ++j;
        }
    }

    void compute_duals() {
        std::vector<char> seen(m + n, 0);
        std::vector<int> stack{0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (int nb : adj[node]) {
                if (seen[nb]) continue;
                seen[nb] = 1;
                if (node < m)
                    v[nb - m] = c(node, nb - m) - u[node];
                else
                    u[nb] = c(nb, node - m) - v[node - m];
                stack.push_back(nb);
            }
        }
    }

    // Unique tree path from row node i to column node m+j.
    std::vector<int> tree_path(int i, int j) const {
        std::vector<int> parent(m + n, -2);
        std::vector<int> stack{i};
        parent[i] = -1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node == m + j) break;
            for (int nb : adj[node])
                if (parent[nb] == -2) {
                    parent[nb] = node;
                    stack.push_back(nb);
                }
        }
        std::vector<int> path;
        for (int node = m + j; node != -1; node = parent[node]) path.push_back(node);
        std::reverse(path.begin(), path.end());
        return path;  // starts at i, ends at m+j
    }

    // One pivot; returns false at optimality.
    bool pivot(double tol, bool bland) {
        compute_duals();
        int bi = -1, bj = -1;
        double best = -tol;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                if (x(i, j) >= 0.0) continue;
                const double rc = c(i, j) - u[i] - v[j];
                if (bland) {
                    if (rc < -tol) {
                        bi = i;
                        bj = j;
                        goto found;
                    }
                } else if (rc < best) {
                    best = rc;
                    bi = i;
                    bj = j;
                }
            }
    found:
        if (bi < 0) return false;

        const std::vector<int> path = tree_path(bi, bj);
        // Cycle cells alternate +,-,+,-,... starting with the entering cell;
        // path nodes alternate row,col,row,col,...
        std::vector<std::pair<int, int>> minus;
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const int p = path[k], q = path[k + 1];
            const int i = p < m ? p : q;
            const int j = (p < m ? q : p) - m;
            if (k % 2 == 0) {  // minus position (first tree edge closes after entering)
                if (x(i, j) < theta) theta = x(i, j);
                minus.emplace_back(i, j);
            }
        }
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const int p = path[k], q = path[k + 1];
            const int i = p < m ? p : q;
            const int j = (p < m ? q : p) - m;
            x(i, j) += (k % 2 == 0) ? -theta : theta;
        }
        // Remove one minus cell that hit zero (lowest index for Bland).
        std::pair<int, int> leave{-1, -1};
        for (const auto& cell : minus)
            if (std::abs(x(cell.first, cell.second)) <= 1e-14) {
                leave = cell;
                break;
            }
        drop_basic(leave.first, leave.second);
        set_basic(bi, bj, theta);
        return true;
    }
};

}  // namespace

W2Result w2_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const int m = mu.size(), n = nu.size();
    if (m == 0 || n == 0) throw InputError("w2_exact: empty measure");
    if (std::abs(mu.weights.sum() - 1.0) > 1e-9 || std::abs(nu.weights.sum() - 1.0) > 1e-9)
        throw InputError("w2_exact: total mass mismatch");
    Eigen::MatrixXd cost(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = squared_distance(mu, nu, i, j);

    Simplex sx(cost, mu.weights, nu.weights);
    const double tol = 1e-13 * std::max(1.0, cost.maxCoeff());
    const long max_iters = 200L * (m + n) * (m + n) + 10000L;
    long it = 0;
    for (; it < max_iters; ++it)
        if (!sx.pivot(tol, /*bland=*/it > max_iters / 2)) break;
    if (it >= max_iters) throw ConvergenceError("w2_exact: simplex iteration cap reached");

    W2Result res;
    res.method = "exact_simplex";
    TransportPlan plan;
    plan.source = mu;
    plan.target = nu;
    plan.plan = sx.x.cwiseMax(0.0);
    double total = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (plan.plan(i, j) > 0.0) total += plan.plan(i, j) * cost(i, j);
    plan.cost = total;
    sx.compute_duals();
    res.dual_u = sx.u;
    res.dual_v = sx.v;
    const double dual_value = mu.weights.dot(sx.u) + nu.weights.dot(sx.v);
    res.cost = total;
    res.value = std::sqrt(std::max(0.0, total));
    res.duality_gap = std::abs(total - dual_value);
    res.lower_sq = dual_value;
    res.upper_sq = total;
    res.plan = std::move(plan);
    return res;
}

W2Result w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int exact_cap) {
    if (static_cast<long>(mu.size()) * nu.size() <= exact_cap) return w2_exact(mu, nu);
    throw ResourceError("w2: instance exceeds the exact-solver cap; use the entropic grid solver");
}

namespace {

struct Atoms {
    std::vector<double> x;    // sorted positions
    std::vector<double> cum;  // cumulative weights, ending at 1
};

Atoms sorted_atoms(const Eigen::ArrayXd& pos, const Eigen::ArrayXd& w) {
    std::vector<int> idx(pos.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return pos[a] < pos[b]; });
    Atoms at;
    double total = w.sum(), acc = 0.0;
    for (int k : idx) {
        if (w[k] <= 0.0) continue;
        at.x.push_back(pos[k]);
        acc += w[k] / total;
        at.cum.push_back(acc);
    }
    if (!at.cum.empty()) at.cum.back() = 1.0;
    return at;
}

// Quantile of the extended (periodically lifted) measure at level t in R.
double quantile_ext(const Atoms& at, double t, double circumference) {
    double base = std::floor(t);
    double q = t - base;
    const auto it = std::lower_bound(at.cum.begin(), at.cum.end(), q - 1e-15);
    const std::size_t k = std::min<std::size_t>(it - at.cum.begin(), at.x.size() - 1);
    return at.x[k] + base * circumference;
}

double circle_cost(const Atoms& ma, const Atoms& na, double alpha, double L) {
    // cost(alpha) = int_0^1 (X_mu(q) - X_nu(q + alpha))^2 dq, exact by
    // merging the breakpoints of both piecewise-constant quantiles.
    std::vector<double> brk;
    for (double q : ma.cum)
        if (q < 1.0) brk.push_back(q);
    for (double q : na.cum) {
        double t = q - alpha;
        t -= std::floor(t);
        if (t > 0.0 && t < 1.0) brk.push_back(t);
    }
    brk.push_back(0.0);
    brk.push_back(1.0);
    std::sort(brk.begin(), brk.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
        const double dq = brk[k + 1] - brk[k];
        if (dq <= 1e-16) continue;
        const double q = 0.5 * (brk[k] + brk[k + 1]);
        const double d = quantile_ext(ma, q, L) - quantile_ext(na, q + alpha, L);
        acc += d * d * dq;
    }
    return acc;
}

}  // namespace

double w2_line_1d(const Eigen::ArrayXd& x_mu, const Eigen::ArrayXd& w_mu,
                  const Eigen::ArrayXd& x_nu, const Eigen::ArrayXd& w_nu) {
    const Atoms ma = sorted_atoms(x_mu, w_mu);
    const Atoms na = sorted_atoms(x_nu, w_nu);
    std::vector<double> brk{0.0, 1.0};
    for (double q : ma.cum) brk.push_back(q);
    for (double q : na.cum) brk.push_back(q);
    std::sort(brk.begin(), brk.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
        const double dq = brk[k + 1] - brk[k];
        if (dq <= 1e-16) continue;
        const double q = 0.5 * (brk[k] + brk[k + 1]);
        const double d = quantile_ext(ma, q, 0.0) - quantile_ext(na, q, 0.0);
        acc += d * d * dq;
    }
    return std::sqrt(std::max(0.0, acc));
}

double w2_circle_1d(const Eigen::ArrayXd& x_mu, const Eigen::ArrayXd& w_mu,
                    const Eigen::ArrayXd& x_nu, const Eigen::ArrayXd& w_nu, double L) {
    const Atoms ma = sorted_atoms(x_mu, w_mu);
    const Atoms na = sorted_atoms(x_nu, w_nu);
    auto f = [&](double alpha) { return circle_cost(ma, na, alpha, L); };
    // cost(alpha) is convex on R; golden-section over a bracketing interval.
    double lo = -1.0, hi = 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
    double f1 = f(c1), f2 = f(c2);
    for (int it = 0; it < 96; ++it) {
        if (f1 <= f2) {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = f(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = f(c2);
        }
    }
    return std::sqrt(std::max(0.0, std::min(f1, f2)));
}

double w2_spatial(const SpatialDensity& mu, const SpatialDensity& nu, bool periodic) {
    if (!(mu.grid == nu.grid)) throw InputError("w2_spatial: grid mismatch");
    const Eigen::ArrayXd xs = mu.grid.nodes();
    const Eigen::ArrayXd wm = mu.values * mu.grid.dx();
    const Eigen::ArrayXd wn = nu.values * nu.grid.dx();
    if (periodic) return w2_circle_1d(xs, wm, xs, wn, mu.grid.length());
    return w2_line_1d(xs, wm, xs, wn);
}

}  // namespace sctl

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sctl/rng.hpp"
#include "sctl/sinkhorn.hpp"
#include "sctl/w2.hpp"

using namespace sctl;

namespace {

// Exhaustive vertex enumeration for the transportation polytope: every
// vertex is the flow of a spanning tree of K_{m,n}; trees are enumerated
// via Prufer sequences over the m+n labeled nodes.  Independent oracle for
// the simplex solver on tiny instances.
double brute_force_w2sq(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const int m = mu.size(), n = nu.size(), N = m + n;
    Eigen::MatrixXd cost(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = squared_distance(mu, nu, i, j);
    if (N == 2) return mu.weights[0] * cost(0, 0);

    double best = std::numeric_limits<double>::infinity();
    const long total = static_cast<long>(std::pow(N, N - 2));
    std::vector<int> seq(N - 2);
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (int k = 0; k < N - 2; ++k) {
            seq[k] = static_cast<int>(c % N);
            c /= N;
        }
        // Prufer decode.
        std::vector<int> degree(N, 1);
        for (int s : seq) ++degree[s];
        std::vector<std::pair<int, int>> edges;
        std::vector<bool> used(N, false);
        int leaf = -1;
        auto next_leaf = [&](int from) {
            for (int i = from; i < N; ++i)
                if (degree[i] == 1 && !used[i]) return i;
            return -1;
        };
        bool bipartite_ok = true;
        int ptr = next_leaf(0);
        for (int s : seq) {
            leaf = ptr;
            used[leaf] = true;
            edges.emplace_back(leaf, s);
            if (--degree[s] == 1 && s < leaf)
                ptr = s;
            else
                ptr = next_leaf(0);
        }
        int a = -1, b = -1;
        for (int i = 0; i < N; ++i)
            if (!used[i]) (a < 0 ? a : b) = i;
        edges.emplace_back(a, b);
        for (auto [u, v] : edges)
            if ((u < m) == (v < m)) bipartite_ok = false;
        if (!bipartite_ok) continue;

        // Solve the tree flows by leaf elimination.
        std::vector<double> excess(N);
        for (int i = 0; i < m; ++i) excess[i] = mu.weights[i];
        for (int j = 0; j < n; ++j) excess[m + j] = -nu.weights[j];
        std::vector<std::vector<std::pair<int, int>>> adj(N);  // (nb, edge idx)
        for (std::size_t e = 0; e < edges.size(); ++e) {
            adj[edges[e].first].emplace_back(edges[e].second, e);
            adj[edges[e].second].emplace_back(edges[e].first, e);
        }
        std::vector<int> deg(N);
        for (int i = 0; i < N; ++i) deg[i] = static_cast<int>(adj[i].size());
        std::vector<bool> done_edge(edges.size(), false), done_node(N, false);
        std::vector<double> flow(edges.size(), 0.0);
        bool feasible = true;
        for (int round = 0; round < N - 1; ++round) {
            int lf = -1;
            for (int i = 0; i < N; ++i)
                if (!done_node[i] && deg[i] == 1) {
                    lf = i;
                    break;
                }
            if (lf < 0) break;
            int eidx = -1, nb = -1;
            for (auto [v, e] : adj[lf])
                if (!done_edge[e]) {
                    eidx = e;
                    nb = v;
                    break;
                }
            // Flow from the row side to the column side is positive.
            const double f = (lf < m) ? excess[lf] : -excess[lf];
            if (f < -1e-12) feasible = false;
            flow[eidx] = f;
            excess[nb] += excess[lf];
            excess[lf] = 0;
            done_edge[eidx] = true;
            done_node[lf] = true;
            --deg[lf];
            --deg[nb];
        }
        if (!feasible) continue;
        double c_total = 0.0;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const int i = std::min(edges[e].first, edges[e].second);
            const int j = std::max(edges[e].first, edges[e].second) - m;
            c_total += std::max(flow[e], 0.0) * cost(i, j);
        }
        best = std::min(best, c_total);
    }
    return best;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int dim) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    DiscreteMeasure m;
    m.points.resize(n, dim);
    m.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d) m.points(i, d) = uni(rng);
        m.weights[i] = 0.05 + std::abs(uni(rng));
    }
    m.weights /= m.weights.sum();
    return m;
}

}  // namespace

TEST_CASE("w2: identical measures give zero with the diagonal plan") {
    std::mt19937_64 rng = substream(1ULL, 0);
    DiscreteMeasure mu = random_measure(rng, 5, 2);
    W2Result r = w2_exact(mu, mu);
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(r.plan.has_value());
    r.plan->validate();
    for (int i = 0; i < 5; ++i)
        CHECK(r.plan->plan(i, i) == doctest::Approx(mu.weights[i]).epsilon(1e-12));
}

TEST_CASE("w2: two Diracs") {
    DiscreteMeasure mu, nu;
    mu.points.resize(1, 2);
    mu.points << 0.2, -0.1;
    mu.weights = Eigen::VectorXd::Ones(1);
    nu.points.resize(1, 2);
    nu.points << -0.3, 0.4;
    nu.weights = Eigen::VectorXd::Ones(1);
    W2Result r = w2_exact(mu, nu);
    const double d = std::hypot(0.5, 0.5);
    CHECK(r.value == doctest::Approx(d).epsilon(1e-14));
    CHECK(r.plan->plan(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("w2: translation of a cloud costs exactly the shift") {
    std::mt19937_64 rng = substream(2ULL, 0);
    DiscreteMeasure mu = random_measure(rng, 5, 2);
    DiscreteMeasure nu = mu;
    const Eigen::RowVector2d shift(0.35, -0.2);
    nu.points.rowwise() += shift;
    W2Result r = w2_exact(mu, nu);
    CHECK(r.value == doctest::Approx(shift.norm()).epsilon(1e-12));
    // Brute force agrees (m + n = 10 is too big; use a 3-site slice).
    DiscreteMeasure mu3 = random_measure(rng, 3, 2), nu3 = mu3;
    nu3.points.rowwise() += shift;
    CHECK(brute_force_w2sq(mu3, nu3) == doctest::Approx(shift.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("w2 exact matches exhaustive vertex enumeration on <= 6 sites") {
    std::mt19937_64 rng = substream(3ULL, 0);
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 1 + static_cast<int>(trial % 5);
        const int n = 1 + static_cast<int>((trial / 5) % 5);
        if (m + n > 6) continue;
        const int dim = 1 + (trial % 2);
        DiscreteMeasure mu = random_measure(rng, m, dim);
        DiscreteMeasure nu = random_measure(rng, n, dim);
        const double oracle = brute_force_w2sq(mu, nu);
        W2Result r = w2_exact(mu, nu);
        CHECK(r.cost == doctest::Approx(oracle).epsilon(1e-10));
        r.plan->validate();
        // Primal-dual certificate: feasibility and zero gap.
        CHECK(r.duality_gap < 1e-9);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                CHECK(r.dual_u[i] + r.dual_v[j] <=
                      squared_distance(mu, nu, i, j) + 1e-9);
    }
}

TEST_CASE("w2: periodic minimal-image metric") {
    DiscreteMeasure mu, nu;
    mu.points.resize(1, 1);
    mu.points << -2.8;
    mu.weights = Eigen::VectorXd::Ones(1);
    mu.periodic_lengths.resize(1);
    mu.periodic_lengths[0] = 2.0 * kPi;
    nu = mu;
    nu.points << 2.8;
    // Across the wrap the distance is 2*pi - 5.6.
    W2Result r = w2_exact(mu, nu);
    CHECK(r.value == doctest::Approx(2.0 * kPi - 5.6).epsilon(1e-12));
}

TEST_CASE("1D quantile solvers agree with the simplex") {
    std::mt19937_64 rng = substream(4ULL, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6;
        Eigen::ArrayXd xs(n), wa(n), xb(n), wb(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = 2.0 * kPi * uni(rng) - kPi;
            xb[i] = 2.0 * kPi * uni(rng) - kPi;
            wa[i] = 0.1 + uni(rng);
            wb[i] = 0.1 + uni(rng);
        }
        wa /= wa.sum();
        wb /= wb.sum();

        //

        DiscreteMeasure mu, nu;
        mu.points = xs.matrix();
        mu.weights = wa.matrix();
        nu.points = xb.matrix();
        nu.weights = wb.matrix();
        const double line = w2_line_1d(xs, wa, xb, wb);
        CHECK(line * line == doctest::Approx(w2_exact(mu, nu).cost).epsilon(1e-9));

        mu.periodic_lengths.resize(1);
        mu.periodic_lengths[0] = 2.0 * kPi;
        nu.periodic_lengths = mu.periodic_lengths;
        const double circ = w2_circle_1d(xs, wa, xb, wb, 2.0 * kPi);
        CHECK(circ * circ == doctest::Approx(w2_exact(mu, nu).cost).epsilon(2e-7));
    }
}

TEST_CASE("entropic grid solver: translated Gaussian on the phase grid") {
    const double hbar = 0.05;
    SpatialGrid space(64, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 64);

    auto gaussian = [&](double x0, double v0, double sx, double sv) {
        Eigen::ArrayXXd vals(grid.nx(), grid.nv);
        for (int a = 0; a < grid.nx(); ++a)
            for (int j = 0; j < grid.nv; ++j) {
                const double dx = space.wrap(grid.x(a) - x0);
                const double dv = grid.v(j) - v0;
                vals(a, j) = std::exp(-dx * dx / (2 * sx * sx) - dv * dv / (2 * sv * sv));
            }
        return make_normalized_field(grid, vals, MarginPolicy::Ignore);
    };

    PhaseField mu = gaussian(-0.5, 0.1, 0.4, 0.12);
    PhaseField nu = gaussian(0.3, -0.05, 0.4, 0.12);
    //

    GridW2Options opts;
    opts.target_bracket = 1e-3;
    GridW2Result r = w2_grid_entropic(mu, nu, opts);
    const double expect_sq = 0.8 * 0.8 + 0.15 * 0.15;
    CHECK(r.lower_sq <= expect_sq * 1.02);
    CHECK(r.upper_sq >= expect_sq * 0.98);
    CHECK(r.cost == doctest::Approx(expect_sq).epsilon(0.02));
    CHECK(r.upper_sq - r.lower_sq < 1e-3 + 0.05 * expect_sq);

    // Identical inputs: divergence collapses to ~0.
    GridW2Result same = w2_grid_entropic(mu, mu, opts);
    CHECK(same.cost < 1e-6);
    CHECK(same.lower_sq <= 1e-9);
}

TEST_CASE("entropic bracket is honest against the exact solver") {
    const double hbar = 0.1;
    SpatialGrid space(32, kPi);
    PhaseGrid grid = PhaseGrid::wigner_compatible(space, hbar, 32);
    std::mt19937_64 rng = substream(6ULL, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::ArrayXXd va = Eigen::ArrayXXd::Zero(grid.nx(), grid.nv);
        Eigen::ArrayXXd vb = Eigen::ArrayXXd::Zero(grid.nx(), grid.nv);
        // Sparse random fields: few occupied cells, exactly solvable.
        for (int k = 0; k < 7; ++k) {
            va(static_cast<int>(uni(rng) * grid.nx()), 8 + static_cast<int>(uni(rng) * 16)) +=
                0.2 + uni(rng);
            vb(static_cast<int>(uni(rng) * grid.nx()), 8 + static_cast<int>(uni(rng) * 16)) +=
                0.2 + uni(rng);
        }
        PhaseField mu = make_normalized_field(grid, va, MarginPolicy::Ignore);
        PhaseField nu = make_normalized_field(grid, vb, MarginPolicy::Ignore);
        const double exact = w2_exact(measure_from_field(mu), measure_from_field(nu)).cost;
        GridW2Options opts;
        opts.target_bracket = std::max(1e-4, 0.02 * exact);
        GridW2Result r = w2_grid_entropic(mu, nu, opts);
        CHECK(r.lower_sq <= exact + 1e-9);
        CHECK(r.upper_sq >= exact - 1e-9);
        CHECK(r.cost == doctest::Approx(exact).epsilon(0.05));
    }
}

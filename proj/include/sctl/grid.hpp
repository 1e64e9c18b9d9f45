#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "sctl/errors.hpp"

namespace sctl {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// Periodic spatial box [-x_extent, x_extent), uniform nodes.
struct SpatialGrid {
    int nx = 0;
    double x_extent = 0.0;

    SpatialGrid() = default;
    // nx >= 2 admits the degenerate grids of desk-scale coupling instances;
    // phase-space grids tighten this to >= 4.
    SpatialGrid(int nx_, double x_extent_) : nx(nx_), x_extent(x_extent_) {
        if (nx < 2 || !is_pow2(nx)) throw InputError("SpatialGrid: nx must be a power of two >= 2");
        if (!(x_extent > 0.0)) throw InputError("SpatialGrid: x_extent must be positive");
    }

    double length() const { return 2.0 * x_extent; }
    double dx() const { return length() / nx; }
    double x(int a) const { return -x_extent + a * dx(); }

    Eigen::ArrayXd nodes() const {
        Eigen::ArrayXd out(nx);
        for (int a = 0; a < nx; ++a) out[a] = x(a);
        return out;
    }

    // Angular wavenumbers in FFT index order: k_j = (2*pi/L) * sigma(j),
    // sigma(j) = j for j < nx/2, j - nx otherwise.
    Eigen::ArrayXd wavenumbers() const {
        Eigen::ArrayXd out(nx);
        const double base = 2.0 * kPi / length();
        for (int j = 0; j < nx; ++j) out[j] = base * (j < nx / 2 ? j : j - nx);
        return out;
    }

    // Minimal-image displacement into [-L/2, L/2).
    double wrap(double s) const {
        const double L = length();
        s = std::fmod(s, L);
        if (s < -0.5 * L) s += L;
        if (s >= 0.5 * L) s -= L;
        return s;
    }

    // Periodic coordinate into [-x_extent, x_extent).
    double wrap_coord(double x0) const {
        const double L = length();
        double s = std::fmod(x0 + x_extent, L);
        if (s < 0) s += L;
        return s - x_extent;
    }

    bool operator==(const SpatialGrid& o) const { return nx == o.nx && x_extent == o.x_extent; }
};

// Phase-space box: spatial axis as above, velocity axis [-v_extent, v_extent).
// `dim` records the physical dimension of the problem the grid stands for;
// the sampled machinery (fields, transforms, dynamics) runs at dim == 1,
// while dim == 3 enters through constants and certificates.
struct PhaseGrid {
    int dim = 1;
    SpatialGrid space;
    int nv = 0;
    double v_extent = 0.0;

    PhaseGrid() = default;
    PhaseGrid(SpatialGrid space_, int nv_, double v_extent_, int dim_ = 1)
        : dim(dim_), space(space_), nv(nv_), v_extent(v_extent_) {
        if (nv < 4 || !is_pow2(nv)) throw InputError("PhaseGrid: nv must be a power of two >= 4");
        if (space.nx < 4) throw InputError("PhaseGrid: nx must be >= 4");
        if (!(v_extent > 0.0)) throw InputError("PhaseGrid: v_extent must be positive");
        if (dim != 1 && dim != 3) throw InputError("PhaseGrid: dim must be 1 or 3");
    }

    int nx() const { return space.nx; }
    double dx() const { return space.dx(); }
    double dv() const { return 2.0 * v_extent / nv; }
    double v(int j) const { return -v_extent + j * dv(); }
    double cell_volume() const { return dx() * dv(); }
    double x(int a) const { return space.x(a); }

    Eigen::ArrayXd v_nodes() const {
        Eigen::ArrayXd out(nv);
        for (int j = 0; j < nv; ++j) out[j] = v(j);
        return out;
    }

    // Sampling ratio of the discrete Wigner/Weyl pair on this grid:
    // m = 4 * x_extent * v_extent / (pi * hbar * nx).  The pair is mutually
    // inverse (and the velocity marginal reproduces the quantum density)
    // exactly when m == 1; m > 1 means the grid under-resolves wavelength
    // 2*pi*hbar / v_extent.
    double sampling_ratio(double hbar) const {
        return 4.0 * space.x_extent * v_extent / (kPi * hbar * nx());
    }

    bool wigner_exact(double hbar, double tol = 1e-9) const {
        return std::abs(sampling_ratio(hbar) - 1.0) < tol;
    }

    // The critically sampled phase grid over a given spatial grid:
    // v_extent = pi * hbar * nx / (4 * x_extent).
    static PhaseGrid wigner_compatible(const SpatialGrid& space, double hbar, int nv = -1, int dim = 1) {
        if (nv <= 0) nv = space.nx;
        const double vext = kPi * hbar * space.nx / (4.0 * space.x_extent);
        return PhaseGrid(space, nv, vext, dim);
    }

    bool operator==(const PhaseGrid& o) const {
        return dim == o.dim && space == o.space && nv == o.nv && v_extent == o.v_extent;
    }
};

}  // namespace sctl

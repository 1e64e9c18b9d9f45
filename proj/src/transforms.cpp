#include "sctl/transforms.hpp"

#include <cmath>
#include <string>

#include "sctl/fft.hpp"

namespace sctl {

namespace {

constexpr std::size_t kWignerMemoryBudget = std::size_t(2) << 30;  // bytes

void require_compatible(const PhaseGrid& grid, double hbar, const char* who) {
    const double m = grid.sampling_ratio(hbar);
    if (std::abs(m - 1.0) > 1e-9) {
        const int need = static_cast<int>(std::ceil(4.0 * grid.space.x_extent * grid.v_extent / (kPi * hbar)));
        throw ResolutionError(std::string(who) + ": phase grid is not critically sampled for hbar (" +
                              "sampling ratio " + std::to_string(m) + ", need nx = " + std::to_string(need) +
                              " with matched v_extent; see PhaseGrid::wigner_compatible)");
    }
}

int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

}  // namespace

double GaussianKernelSpec::value(double z_sq) const {
    return std::pow(kPi * hbar, -d) * std::exp(-z_sq / hbar);
}

double GaussianKernelSpec::multiplier(double k_sq) const {
    return std::exp(-hbar * k_sq / 4.0);
}

Eigen::VectorXcd coherent_state(const SpatialGrid& space, double hbar, double x0, double p0) {
    const int nx = space.nx;
    const double L = space.length();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(nx);
    // Periodized Gaussian: images keep both the envelope and the momentum
    // phase consistent across the wrap.
    for (int a = 0; a < nx; ++a) {
        const double x = space.x(a);
        Complex acc(0.0, 0.0);
        for (int img = -2; img <= 2; ++img) {
            const double xi = x + img * L;
            const double u = xi - x0;
            acc += std::exp(-u * u / (2.0 * hbar)) * std::polar(1.0, p0 * xi / hbar);
        }
        psi[a] = acc;
    }
    const double nrm = std::sqrt(psi.squaredNorm() * space.dx());
    return psi / nrm;
}

MixedState pure_state(double hbar, const SpatialGrid& space, Eigen::VectorXcd psi) {
    const double nrm = std::sqrt(psi.squaredNorm() * space.dx());
    psi /= nrm;
    Eigen::VectorXd w(1);
    w[0] = 1.0 / planck(hbar);
    Eigen::MatrixXcd v(space.nx, 1);
    v.col(0) = psi;
    return make_mixed_state(hbar, space, std::move(w), std::move(v));
}

MixedState coherent_mixed_state(const SpatialGrid& space, double hbar, double x0, double p0) {
    return pure_state(hbar, space, coherent_state(space, hbar, x0, p0));
}

double spectral_tail_fraction(const PhaseField& f) {
    Eigen::MatrixXcd m = f.values.matrix().cast<Complex>();
    fft_cols(m, false);
    fft_rows(m, false);
    const int nx = f.grid.nx(), nv = f.grid.nv;
    double total = 0.0, tail = 0.0;
    for (int a = 0; a < nx; ++a) {
        const int sa = std::abs(a < nx / 2 ? a : a - nx);
        for (int j = 0; j < nv; ++j) {
            const int sj = std::abs(j < nv / 2 ? j : j - nv);
            const double e = std::norm(m(a, j));
            total += e;
            if (sa >= (3 * nx) / 8 || sj >= (3 * nv) / 8) tail += e;
        }
    }
    return total > 0.0 ? tail / total : 0.0;
}

PhaseField wigner_transform(const MixedState& op, int nv) {
    validate_mixed_state(op);
    return wigner_transform_weights(op, op.weights, nv);
}

PhaseField wigner_transform_weights(const MixedState& op, const Eigen::VectorXd& weights, int nv) {
    if (nv <= 0) nv = op.space.nx;
    const PhaseGrid grid = PhaseGrid::wigner_compatible(op.space, op.hbar, nv);
    require_compatible(grid, op.hbar, "wigner_transform");

    const int nx = op.space.nx;
    const std::size_t need = std::size_t(op.rank()) * nx * nv * sizeof(Complex);
    if (need > kWignerMemoryBudget)
        throw ResourceError("wigner_transform: rank x grid exceeds memory budget (" +
                            std::to_string(need >> 20) + " MiB)");

    const double dx = op.space.dx();
    // One period of index pairs: y = 2*l*dx with minimal image |y| < L/2.
    // A wider window would count each kernel pair twice (once with the
    // wrapped displacement) and put a spurious interference ghost at L/2.
    const int half = std::min(nx / 2, nv) / 2;
    // Offset phase from v_j = -v_extent + j*dv: exp(+i*2*l*dx*v_extent/hbar).
    Eigen::VectorXcd offset(nv);
    for (int l = -half; l < half; ++l) {
        const int idx = wrap_index(l, nv);
        offset[idx] = std::polar(1.0, 2.0 * l * dx * grid.v_extent / op.hbar);
    }

    Eigen::ArrayXXd values = Eigen::ArrayXXd::Zero(nx, nv);
    Eigen::VectorXcd row(nv);
    for (int m = 0; m < op.rank(); ++m) {
        const auto psi = op.vectors.col(m);
        for (int i = 0; i < nx; ++i) {
            row.setZero();
            for (int l = -half; l < half; ++l) {
                const int idx = wrap_index(l, nv);
                row[idx] = psi[wrap_index(i + l, nx)] * std::conj(psi[wrap_index(i - l, nx)]) * offset[idx];
            }
            const Eigen::VectorXcd spec = fft(row);
            values.row(i) += (2.0 * dx * weights[m]) * spec.real().array().transpose();
        }
    }
    if ((weights - op.weights).cwiseAbs().maxCoeff() == 0.0)
        return make_wigner_field(grid, std::move(values));
    PhaseField out;
    out.grid = grid;
    out.mass = field_mass(grid, values);
    out.values = std::move(values);
    out.kind = FieldKind::Wigner;
    return out;
}

double sqrt_state_gradient_norm(const MixedState& op, int nv) {
    const PhaseField f = wigner_transform_weights(op, op.weights.cwiseSqrt(), nv);
    const PhaseGrid& grid = f.grid;
    Eigen::MatrixXcd m = f.values.matrix().cast<Complex>();
    fft_cols(m, false);
    fft_rows(m, false);
    const Eigen::ArrayXd kx = grid.space.wavenumbers();
    Eigen::ArrayXd kv(grid.nv);
    const double base = 2.0 * kPi / (2.0 * grid.v_extent);
    for (int j = 0; j < grid.nv; ++j) kv[j] = base * (j < grid.nv / 2 ? j : j - grid.nv);
    // Plancherel: ||grad f||^2 = sum |f_hat|^2 |k|^2 * cellvol / (nx*nv).
    double acc = 0.0;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j)
            acc += std::norm(m(a, j)) * (kx[a] * kx[a] + kv[j] * kv[j]);
    return std::sqrt(acc * grid.cell_volume() / (static_cast<double>(grid.nx()) * grid.nv));
}

OperatorKernel weyl_quantize(const PhaseField& f, double hbar, double tail_tol) {
    require_compatible(f.grid, hbar, "weyl_quantize");
    if (std::abs(f.mass - 1.0) > 1e-8) throw InputError("weyl_quantize: field mass must be 1");
    const double tail = spectral_tail_fraction(f);
    if (tail > tail_tol)
        throw ResolutionError("weyl_quantize: spectral tail mass " + std::to_string(tail) +
                              " exceeds " + std::to_string(tail_tol) + "; refine the grid");

    const int nx = f.grid.nx(), nv = f.grid.nv;
    const double dx = f.grid.dx(), dv = f.grid.dv();
    const double h = planck(hbar);

    // Values on the half-step x lattice (2*nx points) by trigonometric
    // interpolation; the Nyquist mode's half-step phase is purely imaginary
    // and drops out of the real part.
    Eigen::MatrixXcd spec = f.values.matrix().cast<Complex>();
    fft_cols(spec, false);
    Eigen::MatrixXcd shifted = spec;
    for (int a = 0; a < nx; ++a) {
        const int sigma = a < nx / 2 ? a : a - nx;
        shifted.row(a) *= std::polar(1.0, kPi * sigma / nx);
    }
    fft_cols(shifted, true);
    Eigen::MatrixXd g2(2 * nx, nv);
    for (int a = 0; a < nx; ++a) {
        g2.row(2 * a) = f.values.row(a).matrix();
        g2.row(2 * a + 1) = shifted.row(a).real();
    }

    // M(mu, t) = sum_j g2(mu, j) * exp(-i * t * dx * v_j / hbar).
    Eigen::MatrixXcd phases(nv, nx);
    for (int t = -nx / 2; t < nx / 2; ++t)
        for (int j = 0; j < nv; ++j)
            phases(j, t + nx / 2) = std::polar(1.0, -t * dx * f.grid.v(j) / hbar);
    Eigen::MatrixXcd m = g2.cast<Complex>() * phases;

    OperatorKernel out;
    out.hbar = hbar;
    out.space = f.grid.space;
    out.k.resize(nx, nx);
    for (int a = 0; a < nx; ++a) {
        for (int b = 0; b < nx; ++b) {
            int t = b - a;
            t = ((t + nx / 2) % nx + nx) % nx - nx / 2;
            const int mu = wrap_index(2 * a + t, 2 * nx);
            out.k(a, b) = (dv / h) * m(mu, t + nx / 2);
        }
    }
    out.k = 0.5 * (out.k + out.k.adjoint()).eval();
    return out;
}

namespace {

// In-place spectral mollification by g_h on the phase grid.
void mollify(Eigen::ArrayXXd& values, const PhaseGrid& grid, double hbar) {
    Eigen::MatrixXcd m = values.matrix().cast<Complex>();
    fft_cols(m, false);
    fft_rows(m, false);
    const Eigen::ArrayXd kx = grid.space.wavenumbers();
    Eigen::ArrayXd kv(grid.nv);
    const double base = 2.0 * kPi / (2.0 * grid.v_extent);
    for (int j = 0; j < grid.nv; ++j) kv[j] = base * (j < grid.nv / 2 ? j : j - grid.nv);
    const GaussianKernelSpec gk{hbar, grid.dim};
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) m(a, j) *= gk.multiplier(kx[a] * kx[a] + kv[j] * kv[j]);
    fft_rows(m, true);
    fft_cols(m, true);
    values = m.real().array();
}

}  // namespace

PhaseField husimi_of_field(const PhaseField& f, double hbar) {
    Eigen::ArrayXXd values = f.values;
    mollify(values, f.grid, hbar);
    if (f.kind == FieldKind::Probability) {
        values = values.max(0.0);
        return make_probability_field(f.grid, std::move(values), MarginPolicy::Ignore);
    }
    return make_wigner_field(f.grid, std::move(values));
}

HusimiResult husimi_transform_full(const MixedState& op, int nv) {
    PhaseField w = wigner_transform(op, nv);
    Eigen::ArrayXXd values = std::move(w.values);
    mollify(values, w.grid, op.hbar);
    const double min_raw = values.minCoeff();
    if (min_raw < -1e-12 * std::max(1.0, values.maxCoeff()))
        throw InputError("husimi_transform: negativity " + std::to_string(min_raw) +
                         " below clamp threshold");
    values = values.max(0.0);
    PhaseField out;
    out.grid = w.grid;
    out.mass = field_mass(w.grid, values);
    out.values = std::move(values);
    out.kind = FieldKind::Probability;
    if (std::abs(out.mass - 1.0) > 1e-8)
        throw InputError("husimi_transform: mass " + std::to_string(out.mass) + " != 1");
    return HusimiResult{std::move(out), min_raw};
}

PhaseField husimi_transform(const MixedState& op, int nv) {
    return husimi_transform_full(op, nv).field;
}

OperatorKernel toeplitz_kernel(const PhaseField& f, double hbar) {
    if (f.kind != FieldKind::Probability)
        throw InputError("toeplitz_quantize: symbol must be a nonnegative probability field");
    require_compatible(f.grid, hbar, "toeplitz_quantize");
    const int nx = f.grid.nx(), nv = f.grid.nv;
    const double dx = f.grid.dx();
    const double L = f.grid.space.length();
    const double vol = f.grid.cell_volume();
    const double h = planck(hbar);

    // Minimal-image Gaussian per cell; valid when the wrapped tail is
    // negligible, otherwise assemble cell by cell with periodized states.
    const double image_err = std::exp(-(L / 2) * (L / 2) / (2.0 * hbar));
    if (image_err > 1e-12 || nx <= 64) {
        if (static_cast<double>(nx) * nx * nx * nv > 4e9)
            throw ResourceError("toeplitz_quantize: grid too large for periodized cell-by-cell assembly");
        OperatorKernel out;
        out.hbar = hbar;
        out.space = f.grid.space;
        out.k = Eigen::MatrixXcd::Zero(nx, nx);
        for (int cx = 0; cx < nx; ++cx)
            for (int cv = 0; cv < nv; ++cv) {
                if (f.values(cx, cv) <= 0.0) continue;
                const Eigen::VectorXcd psi = coherent_state(f.grid.space, hbar, f.grid.x(cx), f.grid.v(cv));
                out.k.noalias() += (f.values(cx, cv) * vol / h) * (psi * psi.adjoint());
            }
        return out;
    }

    // Factorized assembly.  With ps_c(x) = n * g(x - x_c) * exp(i*v_c*x/hbar),
    //   T(a,b) = (n^2*vol/h) * sum_cx g_a g_b * S(cx, a-b),
    //   S(cx, delta) = sum_cv f(cx,cv) exp(i*v_cv*delta*dx/hbar).
    // Critical sampling makes dv*dx/hbar = pi/nv, so the cv-sum is a bin of
    // the zero-padded length-2*nv DFT; the -v_extent offset is a phase.
    Eigen::VectorXd g(nx);
    for (int a = 0; a < nx; ++a) {
        const double u = f.grid.space.wrap(a * dx);
        g[a] = std::exp(-u * u / (2.0 * hbar));
    }
    const double n2 = 1.0 / (g.squaredNorm() * dx);

    Eigen::MatrixXcd fv = Eigen::MatrixXcd::Zero(nx, 2 * nv);
    for (int cx = 0; cx < nx; ++cx)
        for (int cv = 0; cv < nv; ++cv) fv(cx, cv) = f.values(cx, cv);
    fft_rows(fv, false);  // fv(cx, r) = sum_cv f(cx,cv) exp(-2*pi*i*cv*r/(2*nv))

    OperatorKernel out;
    out.hbar = hbar;
    out.space = f.grid.space;
    out.k.resize(nx, nx);
    const double scale = n2 * vol / h;
    for (int a = 0; a < nx; ++a) {
        for (int b = 0; b <= a; ++b) {
            const int delta = a - b;
            Complex acc(0.0, 0.0);
            const int bin = wrap_index(delta, 2 * nv);
            for (int cx = 0; cx < nx; ++cx) {
                const double ga = g[wrap_index(a - cx, nx)];
                if (ga < 1e-16) continue;
                const double gb = g[wrap_index(b - cx, nx)];
                if (gb < 1e-16) continue;
                acc += ga * gb * std::conj(fv(cx, bin));
            }
            const Complex offset = std::polar(1.0, -f.grid.v_extent * delta * dx / hbar);
            out.k(a, b) = scale * offset * acc;
            out.k(b, a) = std::conj(out.k(a, b));
        }
    }
    return out;
}

MixedState toeplitz_quantize(const PhaseField& f, double hbar) {
    return to_mixed_state(toeplitz_kernel(f, hbar), 1e-10, 1e-14);
}

PhaseField richardson_lucy_symbol(const MixedState& op, const PhaseField& start, int iters) {
    // Positive deconvolution of the Husimi data d = g_h * g_h * g against
    // the double mollifier; multiplicative updates preserve nonnegativity
    // and mass, so no ringing and no clamp.
    const PhaseField data = husimi_transform(op, start.grid.nv);
    const PhaseGrid& grid = start.grid;
    auto conv2 = [&](const Eigen::ArrayXXd& v) {
        Eigen::ArrayXXd out = v;
        mollify(out, grid, op.hbar);
        mollify(out, grid, op.hbar);
        return out;
    };
    Eigen::ArrayXXd g = start.values.max(0.0) + 1e-300;
    for (int it = 0; it < iters; ++it) {
        Eigen::ArrayXXd denom = conv2(g);
        Eigen::ArrayXXd ratio(grid.nx(), grid.nv);
        for (int a = 0; a < grid.nx(); ++a)
            for (int j = 0; j < grid.nv; ++j)
                ratio(a, j) = denom(a, j) > 1e-250 ? data.values(a, j) / denom(a, j) : 1.0;
        g *= conv2(ratio).max(0.0);
    }
    const double mass = field_mass(grid, g);
    if (!(mass > 0.0)) throw InputError("richardson_lucy_symbol: zero mass");
    g /= mass;
    return make_probability_field(grid, std::move(g), MarginPolicy::Ignore);
}

SymbolResult toeplitz_symbol(const MixedState& op, int nv, double amp_cap) {
    PhaseField w = wigner_transform(op, nv);
    const PhaseGrid& grid = w.grid;
    Eigen::MatrixXcd m = w.values.matrix().cast<Complex>();
    fft_cols(m, false);
    fft_rows(m, false);
    const Eigen::ArrayXd kx = grid.space.wavenumbers();
    Eigen::ArrayXd kv(grid.nv);
    const double base = 2.0 * kPi / (2.0 * grid.v_extent);
    for (int j = 0; j < grid.nv; ++j) kv[j] = base * (j < grid.nv / 2 ? j : j - grid.nv);
    const double log_cap = std::log(amp_cap);
    // Modes at the numerical noise floor must not be amplified: the Wigner
    // samples carry ~1e-12 relative discretization noise which the inverse
    // Gaussian would blow up into spurious symbol mass.  The amplification
    // rolls off smoothly (logistic in the exponent): a hard cutoff rings in
    // v and the nonnegativity clamp then converts the ringing into diffuse
    // spurious mass.
    const double noise_floor = 1e-12 * m.cwiseAbs().maxCoeff();
    double kept = 0.0, cut = 0.0;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j) {
            const double expo = op.hbar * (kx[a] * kx[a] + kv[j] * kv[j]) / 4.0;
            const double e = std::norm(m(a, j));
            const double roll = 1.0 / (1.0 + std::exp(8.0 * (expo - 0.8 * log_cap) /
                                                      (0.2 * log_cap)));
            if (expo <= log_cap && std::abs(m(a, j)) > noise_floor && roll > 1e-12) {
                m(a, j) *= std::exp(expo) * roll;
                kept += e * roll;
                cut += e * (1.0 - roll);
            } else {
                m(a, j) = 0.0;
                cut += e;
            }
        }
    fft_rows(m, true);
    fft_cols(m, true);
    Eigen::ArrayXXd values = m.real().array();
    double clamped = 0.0;
    for (int a = 0; a < grid.nx(); ++a)
        for (int j = 0; j < grid.nv; ++j)
            if (values(a, j) < 0.0) {
                clamped -= values(a, j);
                values(a, j) = 0.0;
            }
    clamped *= grid.cell_volume();
    const double mass = field_mass(grid, values);
    if (!(mass > 0.0)) throw InputError("toeplitz_symbol: deconvolution produced zero mass");
    values /= mass;
    SymbolResult res;
    res.symbol = make_probability_field(grid, std::move(values), MarginPolicy::Ignore);
    res.clamped_mass = clamped;
    res.cutoff_tail = (kept + cut) > 0 ? cut / (kept + cut) : 0.0;
    res.renorm_factor = 1.0 / mass;
    return res;
}

}  // namespace sctl

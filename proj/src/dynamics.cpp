#include "sctl/dynamics.hpp"

#include <cmath>
#include <fstream>

#include "sctl/density.hpp"
#include "sctl/fft.hpp"

namespace sctl {

void InteractionKernel::validate() const {
    if (kind == Kind::MollifiedCoulomb && !(eps_moll > 0.0))
        throw InputError("InteractionKernel: mollified kind requires eps_moll > 0");
    if (kind == Kind::CustomTable && (table.size() == 0 || !table.isFinite().all()))
        throw InputError("InteractionKernel: custom table must be finite and nonempty");
}

Eigen::ArrayXd potential_multiplier(const InteractionKernel& kernel, const SpatialGrid& grid) {
    kernel.validate();
    const Eigen::ArrayXd k = grid.wavenumbers();
    Eigen::ArrayXd m = Eigen::ArrayXd::Zero(grid.nx);
    switch (kernel.kind) {
        case InteractionKernel::Kind::PeriodicPoisson1d:
            for (int j = 1; j < grid.nx; ++j) m[j] = kernel.kappa / (k[j] * k[j]);
            break;
        case InteractionKernel::Kind::MollifiedCoulomb:
            for (int j = 1; j < grid.nx; ++j)
                m[j] = kernel.kappa * std::exp(-0.5 * kernel.eps_moll * kernel.eps_moll * k[j] * k[j]) /
                       (k[j] * k[j]);
            break;
        case InteractionKernel::Kind::CustomTable: {
            if (kernel.table.size() != grid.nx)
                throw InputError("InteractionKernel: table size does not match grid");
            Eigen::VectorXcd kt = fft(kernel.table.matrix().cast<Complex>());
            // Discrete convolution V = K * rho dx; drop the mean mode.
            for (int j = 1; j < grid.nx; ++j) m[j] = kt[j].real() * grid.dx();
            break;
        }
        case InteractionKernel::Kind::Coulomb3dRadial:
            throw InputError("InteractionKernel: 3D radial kernel has no periodic multiplier; "
                             "use radial_mean_field");
    }
    return m;
}

Eigen::ArrayXd mean_field_potential(const SpatialDensity& rho, const InteractionKernel& kernel) {
    const Eigen::ArrayXd mult = potential_multiplier(kernel, rho.grid);
    Eigen::VectorXcd spec = fft(rho.values.matrix().cast<Complex>());
    for (int j = 0; j < rho.grid.nx; ++j) spec[j] *= mult[j];
    return ifft(spec).real().array();
}

Eigen::ArrayXd mean_field(const SpatialDensity& rho, const InteractionKernel& kernel) {
    const Eigen::ArrayXd mult = potential_multiplier(kernel, rho.grid);
    const Eigen::ArrayXd k = rho.grid.wavenumbers();
    Eigen::VectorXcd spec = fft(rho.values.matrix().cast<Complex>());
    for (int j = 0; j < rho.grid.nx; ++j) spec[j] *= Complex(0.0, -k[j]) * mult[j];
    return ifft(spec).real().array();
}

Eigen::ArrayXd radial_mean_field(const Eigen::ArrayXd& r, const Eigen::ArrayXd& rho_r,
                                 double kappa) {
    const int n = static_cast<int>(r.size());
    if (rho_r.size() != n || n < 3) throw InputError("radial_mean_field: bad inputs");
    // Enclosed mass with rho piecewise linear between nodes, integrated in
    // closed form (the s^2 weight makes plain trapezoid first order near
    // the origin).
    Eigen::ArrayXd mass(n);
    mass[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        const double r0 = r[i - 1], r1 = r[i], h = r1 - r0;
        const double a = rho_r[i - 1];
        const double b = h > 0.0 ? (rho_r[i] - rho_r[i - 1]) / h : 0.0;
        const double cub = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
        const double qua = (r1 * r1 * r1 * r1 - r0 * r0 * r0 * r0) / 4.0;
        mass[i] = mass[i - 1] + 4.0 * kPi * (a * cub + b * (qua - r0 * cub));
    }
    Eigen::ArrayXd e(n);
    for (int i = 0; i < n; ++i)
        e[i] = r[i] > 0.0 ? kappa * mass[i] / (4.0 * kPi * r[i] * r[i]) : 0.0;
    return e;
}

double field_energy(const Eigen::ArrayXd& e_field, double dx, double kappa) {
    if (kappa == 0.0) return 0.0;
    return e_field.square().sum() * dx / (2.0 * kappa);
}

namespace {

SpatialDensity density_of(const PhaseGrid& grid, const Eigen::ArrayXXd& values) {
    SpatialDensity rho;
    rho.grid = grid.space;
    rho.values = values.rowwise().sum() * grid.dv();
    rho.mass = rho.values.sum() * grid.space.dx();
    return rho;
}

// Periodic cubic B-spline interpolation at a constant shift.  Coefficients
// solve (c_{i-1} + 4 c_i + c_{i+1})/6 = f_i (cyclic); evaluation at nodes
// + delta uses the four B-spline taps.  Partition of unity makes the node
// sum (the mass) exact for any shift.
class PeriodicSpline {
public:
    explicit PeriodicSpline(int n) : n_(n) {
        // Thomas factorization of the tridiagonal [1 4 1]/6 with the cyclic
        // corner handled by Sherman-Morrison.
        diag_.resize(n_);
        Eigen::ArrayXd gamma = Eigen::ArrayXd::Zero(n_);
        gamma[0] = -4.0 / 6.0;
        Eigen::ArrayXd b = Eigen::ArrayXd::Constant(n_, 4.0 / 6.0);
        b[0] -= gamma[0];
        b[n_ - 1] -= (1.0 / 6.0) * (1.0 / 6.0) / gamma[0];
        u_ = Eigen::ArrayXd::Zero(n_);
        u_[0] = gamma[0];
        u_[n_ - 1] = 1.0 / 6.0;
        diag_ = b;
        q_ = thomas(u_);
        vdotq_ = q_[0] + (1.0 / 6.0) / u_[0] * q_[n_ - 1];
    }

    // Solve the cyclic system for B-spline coefficients (Sherman-Morrison
    // around the Thomas solve; q_ = thomas(u) is precomputed).
    Eigen::ArrayXd coefficients(const Eigen::Ref<const Eigen::ArrayXd>& f) const {
        Eigen::ArrayXd y = thomas(f);
        const double g0 = u_[0];
        const double vdoty = y[0] + (1.0 / 6.0) / g0 * y[n_ - 1];
        return y - (vdoty / (1.0 + vdotq_)) * q_;
    }

    // values[i] = S(x_i + delta) with delta in cell units.
    void shift(const Eigen::Ref<const Eigen::ArrayXd>& coeff, double delta_cells,
               Eigen::Ref<Eigen::ArrayXd> out) const {
        const double s = delta_cells - std::floor(delta_cells);
        const int base = static_cast<int>(std::floor(delta_cells));
        const double u = s;
        const double u2 = u * u, u3 = u2 * u;
        const double w0 = (1.0 - 3.0 * u + 3.0 * u2 - u3) / 6.0;
        const double w1 = (4.0 - 6.0 * u2 + 3.0 * u3) / 6.0;
        const double w2 = (1.0 + 3.0 * u + 3.0 * u2 - 3.0 * u3) / 6.0;
        const double w3 = u3 / 6.0;
        for (int i = 0; i < n_; ++i) {
            const int j = i + base;
            out[i] = w0 * coeff[wrap(j - 1)] + w1 * coeff[wrap(j)] + w2 * coeff[wrap(j + 1)] +
                     w3 * coeff[wrap(j + 2)];
        }
    }

private:
    int n_;
    Eigen::ArrayXd diag_;  // modified diagonal for Thomas
    Eigen::ArrayXd u_;     // Sherman-Morrison column
    Eigen::ArrayXd q_;     // thomas(u_)
    double vdotq_ = 0.0;

    int wrap(int i) const {
        i %= n_;
        return i < 0 ? i + n_ : i;
    }

    Eigen::ArrayXd thomas(const Eigen::Ref<const Eigen::ArrayXd>& rhs) const {
        const double off = 1.0 / 6.0;
        Eigen::ArrayXd cp(n_), dp(n_);
        cp[0] = off / diag_[0];
        dp[0] = rhs[0] / diag_[0];
        for (int i = 1; i < n_; ++i) {
            const double m = diag_[i] - off * cp[i - 1];
            cp[i] = off / m;
            dp[i] = (rhs[i] - off * dp[i - 1]) / m;
        }
        Eigen::ArrayXd x(n_);
        x[n_ - 1] = dp[n_ - 1];
        for (int i = n_ - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
        return x;
    }
};

}  // namespace

PhaseField vlasov_step(const PhaseField& f, const InteractionKernel& kernel, double dt,
                       const VlasovOptions& opts) {
    const PhaseGrid& grid = f.grid;
    const double vmax = std::max(std::abs(grid.v(0)), std::abs(grid.v(grid.nv - 1)));
    if (dt * vmax > grid.dx() * opts.cfl_safety) {
        const double suggested = 0.9 * grid.dx() * opts.cfl_safety / vmax;
        throw StepSizeError("vlasov_step: dt * v_max exceeds " + std::to_string(opts.cfl_safety) +
                                " cells; suggested dt = " + std::to_string(suggested),
                            suggested);
    }

    Eigen::ArrayXXd vals = f.values;
    const PeriodicSpline sx(grid.nx());
    const PeriodicSpline sv(grid.nv);

    auto advect_x = [&](double tau) {
        Eigen::ArrayXd col(grid.nx()), out(grid.nx());
        for (int j = 0; j < grid.nv; ++j) {
            // f(x, v) <- f(x - v tau, v): constant shift per v-row.
            col = vals.col(j);
            const Eigen::ArrayXd coeff = sx.coefficients(col);
            sx.shift(coeff, -grid.v(j) * tau / grid.dx(), out);
            vals.col(j) = out;
        }
    };

    advect_x(0.5 * dt);
    const SpatialDensity rho = density_of(grid, vals);
    const Eigen::ArrayXd e_field = mean_field(rho, kernel);
    {
        Eigen::ArrayXd row(grid.nv), out(grid.nv);
        for (int a = 0; a < grid.nx(); ++a) {
            // f(x, v) <- f(x, v - E(x) dt): constant shift per x-column.
            row = vals.row(a).transpose();
            const Eigen::ArrayXd coeff = sv.coefficients(row);
            sv.shift(coeff, -e_field[a] * dt / grid.dv(), out);
            vals.row(a) = out.transpose();
        }
    }
    advect_x(0.5 * dt);

    PhaseField result;
    result.grid = grid;
    result.mass = field_mass(grid, vals);
    result.values = std::move(vals);
    result.kind = f.kind;
    return result;
}

MixedState hartree_step(const MixedState& op, const InteractionKernel& kernel, double dt,
                        const HartreeOptions& opts, HartreeStepInfo* info) {
    const SpatialGrid& grid = op.space;
    const Eigen::ArrayXd k = grid.wavenumbers();
    const double k_max = kPi / grid.dx();
    const double phase = dt * op.hbar * k_max * k_max / 2.0;
    if (phase > opts.kinetic_phase_cap) {
        const double suggested = 0.9 * opts.kinetic_phase_cap * 2.0 / (op.hbar * k_max * k_max);
        throw StepSizeError("hartree_step: kinetic phase " + std::to_string(phase) +
                                " exceeds cap; suggested dt = " + std::to_string(suggested),
                            suggested);
    }

    const SpatialDensity rho = spatial_density_quantum(op);
    const Eigen::ArrayXd v_pot = mean_field_potential(rho, kernel);
    Eigen::VectorXcd half_kick(grid.nx), kinetic(grid.nx);
    for (int a = 0; a < grid.nx; ++a)
        half_kick[a] = std::polar(1.0, -v_pot[a] * dt / (2.0 * op.hbar));
    for (int j = 0; j < grid.nx; ++j)
        kinetic[j] = std::polar(1.0, -op.hbar * k[j] * k[j] * dt / 2.0);

    MixedState out = op;
    for (int m = 0; m < out.rank(); ++m) {
        Eigen::VectorXcd psi = out.vectors.col(m).cwiseProduct(half_kick);
        psi = fft(psi);
        psi = psi.cwiseProduct(kinetic);
        psi = ifft(psi);
        out.vectors.col(m) = psi.cwiseProduct(half_kick);
    }

    // Shared unitary per rank: orthonormality drift is roundoff-level.
    Eigen::MatrixXcd gram = out.vectors.adjoint() * out.vectors * grid.dx();
    gram -= Eigen::MatrixXcd::Identity(out.rank(), out.rank());
    const double drift = gram.cwiseAbs().maxCoeff();
    bool fixed = false;
    if (drift > opts.reorthonormalize_drift) {
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(out.vectors);
        Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(grid.nx, out.rank());
        out.vectors = q / std::sqrt(grid.dx());
        fixed = true;
    }
    if (info) {
        info->orthonormality_drift = drift;
        info->reorthonormalized = fixed;
    }
    return out;
}

double c_infinity(double kappa, double rho_inf_f, double rho_inf_op) {
    return std::max(1.0, kappa) * std::max({1.0, rho_inf_f, rho_inf_op});
}

double vlasov_total_energy(const PhaseField& f, const InteractionKernel& kernel) {
    const SpatialDensity rho = density_of(f.grid, f.values);
    double kin = 0.0;
    for (int j = 0; j < f.grid.nv; ++j) {
        const double v = f.grid.v(j);
        kin += 0.5 * v * v * f.values.col(j).sum();
    }
    kin *= f.grid.cell_volume();
    const Eigen::ArrayXd e_field = mean_field(rho, kernel);
    return kin + field_energy(e_field, f.grid.dx(), kernel.kappa);
}

double hartree_total_energy(const MixedState& op, const InteractionKernel& kernel) {
    const double kin = 0.5 * moments(op, 2);
    const SpatialDensity rho = spatial_density_quantum(op);
    const Eigen::ArrayXd e_field = mean_field(rho, kernel);
    return kin + field_energy(e_field, op.space.dx(), kernel.kappa);
}

namespace {

double sup_norm(const Eigen::ArrayXd& rho) { return rho.maxCoeff(); }

// Richardson estimate from the 2x coarsened (cell-averaged) profile.
double sup_norm_richardson(const Eigen::ArrayXd& rho) {
    const int n = static_cast<int>(rho.size());
    double coarse = 0.0;
    for (int i = 0; i + 1 < n; i += 2) coarse = std::max(coarse, 0.5 * (rho[i] + rho[i + 1]));
    return 2.0 * rho.maxCoeff() - coarse;
}

}  // namespace

void EvolutionLog::to_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw InputError("EvolutionLog: cannot open " + path);
    os.precision(17);
    os << "t,mass_f,mass_op,rho_inf_f,rho_inf_op,energy_f,energy_op,C_inf,"
          "rho_inf_f_rich,rho_inf_op_rich\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        os << times[i] << ',' << mass_f[i] << ',' << mass_op[i] << ',' << rho_inf_f[i] << ','
           << rho_inf_op[i] << ',' << energy_f[i] << ',' << energy_op[i] << ',' << c_inf[i] << ','
           << rho_inf_f_rich[i] << ',' << rho_inf_op_rich[i] << '\n';
}

EvolveResult evolve_pair(const PhaseField& f0, const MixedState& op0,
                         const InteractionKernel& kernel, double t_end, double dt,
                         const std::vector<double>& checkpoint_times,
                         const EvolvePairOptions& opts) {
    if (!(f0.grid.space == op0.space))
        throw InputError("evolve_pair: spatial grids do not match");
    if (!f0.grid.wigner_exact(op0.hbar))
        throw InputError("evolve_pair: phase grid is not critically sampled for hbar");

    const int n_steps = static_cast<int>(std::llround(t_end / dt));
    if (std::abs(n_steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw InputError("evolve_pair: t_end must be a multiple of dt");

    EvolveResult res;
    res.f = f0;
    res.op = op0;

    auto log_state = [&](double t) {
        const SpatialDensity rho_f = density_of(res.f.grid, res.f.values);
        const SpatialDensity rho_op = spatial_density_quantum(res.op);
        res.log.times.push_back(t);
        res.log.mass_f.push_back(res.f.mass);
        res.log.mass_op.push_back(res.op.scaled_trace());
        res.log.rho_inf_f.push_back(sup_norm(rho_f.values));
        res.log.rho_inf_op.push_back(sup_norm(rho_op.values));
        res.log.rho_inf_f_rich.push_back(sup_norm_richardson(rho_f.values));
        res.log.rho_inf_op_rich.push_back(sup_norm_richardson(rho_op.values));
        res.log.energy_f.push_back(vlasov_total_energy(res.f, kernel));
        res.log.energy_op.push_back(hartree_total_energy(res.op, kernel));
        res.log.c_inf.push_back(
            c_infinity(kernel.kappa, res.log.rho_inf_f.back(), res.log.rho_inf_op.back()));
        return std::max(res.log.rho_inf_f.back(), res.log.rho_inf_op.back());
    };

    auto maybe_checkpoint = [&](double t) {
        for (double tc : checkpoint_times)
            if (std::abs(tc - t) <= opts.checkpoint_tol)
                res.checkpoints.push_back(Checkpoint{t, res.f, res.op});
    };

    log_state(0.0);
    maybe_checkpoint(0.0);
    for (int s = 1; s <= n_steps; ++s) {
        res.f = vlasov_step(res.f, kernel, dt, opts.vlasov);
        HartreeStepInfo info;
        res.op = hartree_step(res.op, kernel, dt, opts.hartree, &info);
        if (info.reorthonormalized) ++res.reorthonormalizations;
        const double t = s * dt;
        const double peak = log_state(t);
        maybe_checkpoint(t);
        if (peak > opts.rho_inf_cap) {
            res.aborted = true;
            res.abort_reason = "density sup-norm exceeded cap " + std::to_string(opts.rho_inf_cap);
            return res;
        }
    }
    return res;
}

}  // namespace sctl

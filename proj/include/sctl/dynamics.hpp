#pragma once

#include <string>
#include <vector>

#include "sctl/state.hpp"

namespace sctl {

// Interaction kernels.  The periodic kinds solve -V'' = kappa (rho - 1) on
// the box spectrally (neutralizing background); the mollified kind damps
// the multiplier by exp(-eps_moll^2 k^2 / 2).  kappa > 0 is repulsive,
// kappa < 0 attractive.
struct InteractionKernel {
    enum class Kind { Coulomb3dRadial, MollifiedCoulomb, PeriodicPoisson1d, CustomTable };
    Kind kind = Kind::PeriodicPoisson1d;
    double kappa = 0.0;
    double eps_moll = 0.0;
    Eigen::ArrayXd table;  // real-space kernel samples on the spatial grid

    void validate() const;
};

// Fourier multiplier of the mean-field potential V = K * rho on the grid.
Eigen::ArrayXd potential_multiplier(const InteractionKernel& kernel, const SpatialGrid& grid);

// Mean-field potential and force E = -dV/dx on the periodic grid (zero
// mean field by construction).
Eigen::ArrayXd mean_field_potential(const SpatialDensity& rho, const InteractionKernel& kernel);
Eigen::ArrayXd mean_field(const SpatialDensity& rho, const InteractionKernel& kernel);

// Radial Coulomb field in d = 3: E(r) = kappa * M(r) / (4 pi r^2) with the
// enclosed mass M(r) from cumulative quadrature of 4 pi s^2 rho(s).
Eigen::ArrayXd radial_mean_field(const Eigen::ArrayXd& r, const Eigen::ArrayXd& rho_r,
                                 double kappa);

// Field energy (1/(2 kappa)) * integral E^2 dx; zero for kappa = 0.
double field_energy(const Eigen::ArrayXd& e_field, double dx, double kappa);

double vlasov_total_energy(const PhaseField& f, const InteractionKernel& kernel);
double hartree_total_energy(const MixedState& op, const InteractionKernel& kernel);

struct VlasovOptions {
    double cfl_safety = 4.0;  // max advection displacement in cells
};

// Strang-split semi-Lagrangian step with periodic cubic-spline advection:
// x half step, v full step with E from the mid-time density, x half step.
PhaseField vlasov_step(const PhaseField& f, const InteractionKernel& kernel, double dt,
                       const VlasovOptions& opts = {});

struct HartreeOptions {
    double kinetic_phase_cap = 2.0 * kPi;  // max dt * hbar * k_max^2 / 2
    double reorthonormalize_drift = 1e-6;
};

struct HartreeStepInfo {
    double orthonormality_drift = 0.0;
    bool reorthonormalized = false;
};

// Split-step spectral propagation of every rank vector under the shared
// mean-field potential; weights are untouched (the flow is unitary).
MixedState hartree_step(const MixedState& op, const InteractionKernel& kernel, double dt,
                        const HartreeOptions& opts = {}, HartreeStepInfo* info = nullptr);

// Per-step observables of the synchronized pair evolution.
struct EvolutionLog {
    std::vector<double> times;
    std::vector<double> mass_f, mass_op;
    std::vector<double> rho_inf_f, rho_inf_op;
    std::vector<double> energy_f, energy_op;
    std::vector<double> c_inf;
    // Richardson-extrapolated sup-norm estimates (2 * fine - coarse);
    // logged alongside to expose resolution sensitivity.
    std::vector<double> rho_inf_f_rich, rho_inf_op_rich;

    void to_csv(const std::string& path) const;
};

struct EvolvePairOptions {
    VlasovOptions vlasov;
    HartreeOptions hartree;
    double rho_inf_cap = 1e3;  // blow-up detector
    double checkpoint_tol = 1e-9;
};

struct Checkpoint {
    double time = 0.0;
    PhaseField f;
    MixedState op;
};

struct EvolveResult {
    PhaseField f;
    MixedState op;
    EvolutionLog log;
    std::vector<Checkpoint> checkpoints;
    bool aborted = false;
    std::string abort_reason;
    int reorthonormalizations = 0;
};

EvolveResult evolve_pair(const PhaseField& f0, const MixedState& op0,
                         const InteractionKernel& kernel, double t_end, double dt,
                         const std::vector<double>& checkpoint_times = {},
                         const EvolvePairOptions& opts = {});

// C_inf(t) = max(1, kappa) * max(1, ||rho_f||_inf, ||rho||_inf).
double c_infinity(double kappa, double rho_inf_f, double rho_inf_op);

}  // namespace sctl

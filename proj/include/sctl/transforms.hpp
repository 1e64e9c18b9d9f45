#pragma once

#include "sctl/state.hpp"

namespace sctl {

// Phase-space Gaussian g_h(z) = (pi*hbar)^(-d) exp(-|z|^2/hbar), z in R^{2d}.
// Unit mass for every d; the d = 3 exponent is the paper's case.
struct GaussianKernelSpec {
    double hbar;
    int d;

    double value(double z_sq) const;
    // Fourier multiplier of the convolution: exp(-hbar*|k|^2/4).
    double multiplier(double k_sq) const;
};

// Normalized coherent state at (x0, p0): Gaussian of position variance
// hbar/2, momentum p0, periodized over the box.
Eigen::VectorXcd coherent_state(const SpatialGrid& space, double hbar, double x0, double p0);

// Rank-1 MixedState built from a single normalized vector.
MixedState pure_state(double hbar, const SpatialGrid& space, Eigen::VectorXcd psi);

MixedState coherent_mixed_state(const SpatialGrid& space, double hbar, double x0, double p0);

// Fraction of spectral energy in the outer quarter of either axis' frequency
// band; the aliasing detector for grid-resolution refusals.
double spectral_tail_fraction(const PhaseField& f);

// Discrete Wigner transform
//   f_op(x_i, v_j) = 2*dx * sum_l exp(-i*(2*l*dx)*v_j/hbar)
//                              * op(x_{i+l}, x_{i-l})
// on the critically sampled phase grid (sampling_ratio == 1), evaluated by a
// length-nv FFT per row and rank.  nv defaults to nx.
PhaseField wigner_transform(const MixedState& op, int nv = -1);

// Wigner transform with substituted rank weights (used for functions of the
// operator, e.g. the square root: weights sqrt(w_m)); the result is a plain
// phase-space function, not normalized.
PhaseField wigner_transform_weights(const MixedState& op, const Eigen::VectorXd& weights,
                                    int nv = -1);

// L2 norm of the phase-space gradient of the Wigner transform of sqrt(op),
// computed spectrally on the critically sampled grid.  Enters the general
// upper bound W_h(f,op) <= W2(f, husimi(op)) + sqrt(d hbar + hbar^2 D^2).
double sqrt_state_gradient_norm(const MixedState& op, int nv = -1);

// Weyl quantization of a phase-space function: kernel
//   op_f(x, y) = (1/h) * integral exp(-i*(y-x)*eta/hbar) f((x+y)/2, eta) deta
// with midpoints off the grid handled by trigonometric interpolation.
// Refuses under-resolved input (spectral tail mass > tail_tol).
OperatorKernel weyl_quantize(const PhaseField& f, double hbar, double tail_tol = 1e-6);

// Gaussian mollification by g_h over the phase grid (spectral).
PhaseField husimi_of_field(const PhaseField& f, double hbar);

// Husimi transform g_h * f_op; nonnegative up to -1e-12, clamped.
struct HusimiResult {
    PhaseField field;
    double min_before_clamp;
};
HusimiResult husimi_transform_full(const MixedState& op, int nv = -1);
PhaseField husimi_transform(const MixedState& op, int nv = -1);

// Toeplitz quantization of a nonnegative symbol:
//   op_f = (1/h^d) * sum_cells f_c * cellvol * |z_c><z_c|
// assembled densely and eigendecomposed.  Requires a probability field.
MixedState toeplitz_quantize(const PhaseField& f, double hbar);
OperatorKernel toeplitz_kernel(const PhaseField& f, double hbar);

// Recover a nonnegative symbol g with toeplitz(g) ~ op by Fourier
// deconvolution of the Wigner function (amplification capped), clamping and
// renormalizing.  Residuals are reported, not hidden.
struct SymbolResult {
    PhaseField symbol;
    double clamped_mass;    // mass removed by the nonnegativity clamp
    double cutoff_tail;     // spectral mass beyond the amplification cap
    double renorm_factor;   // applied to restore unit mass
};
SymbolResult toeplitz_symbol(const MixedState& op, int nv = -1, double amp_cap = 1e6);

// Richardson-Lucy refinement of a symbol candidate against the Husimi data
// (positive deconvolution of the doubly mollified symbol); ring-free.
PhaseField richardson_lucy_symbol(const MixedState& op, const PhaseField& start, int iters = 40);

}  // namespace sctl

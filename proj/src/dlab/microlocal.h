#pragma once
#include "dlab/grid.h"

namespace dlab {

// smoothed spectral splitting of the dilation generator A:
// P+ = (tanh((A - M)/R) + 1)/2, realized by principal-value quadrature of
// the tanh kernel over dilations; P- is the exact complement.
struct OutgoingProjector {
    double M = 0.0;
    double R = 4.0;
    double W = 20.0;  // quadrature halfwidth
    double hw = 0.1;  // quadrature step
};

// e^{i tau A} psi(x) = e^{n tau/2} psi(e^tau x). Chirp-z evaluation of the
// grid's trigonometric interpolant at the scaled sample points; points mapped
// outside the box are zeroed. Throws domain-overflow when that zeroing would
// drop more than 1e-6 of the squared norm.
WaveFunction dilate(const WaveFunction& psi, double tau);

// sign > 0: P+ psi. sign < 0: psi - P+ psi.
WaveFunction apply_projector(const OutgoingProjector& p, const WaveFunction& psi, int sign);

// scalar check of the quadrature against tanh(a); the operator realization
// inherits this accuracy on each A-spectral slice
double tanh_kernel_residual(const OutgoingProjector& p, double a);

// e^{-itH0} [multiply by profile(|x|/t^alpha)] e^{+itH0}
WaveFunction phase_space_cutoff(const WaveFunction& psi, double t, double alpha,
                                const CutoffProfile& profile);

} // namespace dlab

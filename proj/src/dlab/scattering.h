#pragma once
#include <string>
#include <vector>
#include "dlab/dynamics.h"

namespace dlab {

// Discrete spectrum of H = H0 + V below the continuum edge at 0.
struct SpectralData {
    GridPtr grid;
    VectorXd eigenvalues;  // ascending, all < -eps_gap
    std::vector<WaveFunction> eigenvectors;
    double continuum_threshold = 0.0;
};

// Bound states of a static potential: Sturm-sequence isolation on the
// finite-difference surrogate, then Rayleigh-quotient polish against the
// spectral-collocation Hamiltonian. Eigenvalues inside (-eps_gap, 0) mean the
// continuum edge is not spectrally clean and the potential is rejected.
SpectralData bound_states(const QuasiPeriodicPotential& V, double eps_gap = 1e-6);

// P_c psi = psi - sum_j <phi_j, psi> phi_j
WaveFunction project_continuum(const SpectralData& sd, const WaveFunction& psi);

struct CookConfig {
    double du = 0.05;         // Duhamel quadrature step, shared with the co-evolution
    double dt = 1e-3;         // fine step for the final backward sweep
    double tail_tol = 1e-4;
    double tail_step = 0.25;  // sampling of the [T, 2T] tail integral
};

struct CookResult {
    WaveFunction state;
    double tail = 0.0;  // int_T^{2T} |V(u) e^{-iuH0} f| du
};

// Omega_{+-} f = f + i int_0^{+-T} e^{iuH} V(u) e^{-iuH0} f du. The integral
// is accumulated alongside the interacting propagator (one Strang step per
// quadrature node) and unwound to u = 0 in a single backward sweep, so the
// cost is two traversals of [0, T] regardless of the node count. A tail above
// tail_tol throws horizon-too-short with the measured value.
CookResult cook_wave_operator(const QuasiPeriodicPotential& V, const WaveFunction& f,
                              double T, int direction, const CookConfig& cfg = {});

// Omega_{+-}* psi at horizon T: free_evolve(evolve(P_c psi, 0, +-T), -+T).
// Static potentials only.
WaveFunction adjoint_wave_operator(const QuasiPeriodicPotential& V, const SpectralData& sd,
                                   const WaveFunction& psi, double T, int direction,
                                   const PropagatorConfig& cfg = {});

// 1/H0 as frequency-side division by |xi|^2. Cartesian input must carry no
// zero-mode mass (fraction above 1e-8 of the total is an error); the zero bin
// of the output is empty.
WaveFunction free_resolvent(const WaveFunction& psi);

// Defect of the time-integral representation of Omega_+* applied to g, both
// sides evaluated at horizon T on an s-wave radial grid. The time integral is
// done in closed form between sine modes, so T is the only truncation.
double representation_residual(const QuasiPeriodicPotential& V, const WaveFunction& g,
                               double T);

// Matrix of an operator on the lowest m modes of a harmonic reference well;
// basis columns are orthonormal grid vectors.
struct OperatorMatrix {
    GridPtr grid;
    Eigen::MatrixXd basis;
    Eigen::MatrixXcd entries;
    std::string label;
};

// Lowest m eigenmodes of S k^2 S + (kappa r)^2. The trap keeps the family
// energy-capped: pairing kappa ~ 1/m holds the spanned band fixed while m
// grows, which is what makes leading singular values basis-stable.
Eigen::MatrixXd harmonic_reference_basis(const GridPtr& g, int m, double kappa);

// C = P+ (1 - Omega_+*) + P- (1 - Omega_-*) compressed to the reference
// basis, with the u-integral of the Duhamel form evaluated exactly between
// sine modes at horizon T. kappa follows the energy-capped rule 3.2/m.
OperatorMatrix assemble_C(const QuasiPeriodicPotential& V, int m, double T);

struct CSplit {
    Eigen::MatrixXcd C_m, C_r;  // truncated SVD part and remainder
    VectorXd singular_values;
    int rank = 0;
};

// Keep every singular triple with sigma >= threshold in C_m; the remainder
// has spectral norm below threshold by construction. If no rank below m
// achieves that, the basis is too small to certify the split.
CSplit split_C(const OperatorMatrix& C, double threshold = 0.01);

struct WeightedResolventReport {
    double value = 0.0;        // |w_minus (1 - C_r)^{-1} C_r w_plus| on the window
    double neumann_dev = 0.0;  // direct solve vs resolvent-identity route
};

// Weighted norm of <x>^{-eta} (1 - C_r)^{-1} C_r <x>^{sigma} restricted to
// r <= r_win, computed by direct solve and cross-checked through the identity
// (1 - C_r)^{-1} = 1 + (1 - C_r)^{-1} C_r.
WeightedResolventReport weighted_resolvent_check(const OperatorMatrix& C, const CSplit& split,
                                                 double eta, double sigma, double r_win = 72.0);

// Binary container for regression goldens: magic "OPMX1", little-endian
// sizes, then basis and entries as row-major complex64 pairs.
void write_opmx(const std::string& path, const OperatorMatrix& M);
OperatorMatrix read_opmx(const std::string& path, GridPtr g);

}  // namespace dlab

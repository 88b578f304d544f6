#pragma once
#include <Eigen/Dense>
#include <complex>
#include <memory>
#include "dlab/errors.h"

namespace dlab {

using Eigen::VectorXcd;
using Eigen::VectorXd;
using complexd = std::complex<double>;

enum class GridMode { cartesian, radial };

// Discretized geometry. Cartesian: periodic box [-L, L)^n, N points per axis,
// spacing h = 2L/N, FFT frequency grid. Radial: half-line (0, L) with
// Dirichlet ends via odd extension, interior points r_j = j h (j = 1..N-1),
// h = L/N, sine spectrum k_m = m pi / L. Radial wavefunctions store the
// half-line reduction u(r) = r^{(n-1)/2} psi(r); the leftover centrifugal
// coefficient (n-1)(n-3)/4 is carried as angular_term and treated as part of
// the potential.
struct Grid {
    GridMode mode;
    int n = 1;
    double L = 0;
    int N = 0;
    double h = 0;
    double angular_term = 0;
    VectorXd axis; // cartesian: x_j (one axis, N); radial: r_j (N-1)
    VectorXd freq; // cartesian: xi_k FFT order (N); radial: k_m (N-1)

    Eigen::Index points() const { return mode == GridMode::cartesian ? ipow(N, n) : N - 1; }
    double quad_weight() const;            // h^n (cartesian) or h (radial)
    double r2(Eigen::Index flat) const;    // |x|^2 at a flattened index
    double xi2(Eigen::Index flat) const;   // |xi|^2 at a flattened frequency index

    static Eigen::Index ipow(int b, int e);
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(GridMode mode, int n, double L, int N);

struct WaveFunction {
    GridPtr grid;
    VectorXcd amp;
    double norm() const;
    complexd inner(const WaveFunction& other) const; // <this, other> with grid quadrature
};

WaveFunction make_wave(GridPtr g, VectorXcd amp);

// smooth monotone ramp: 0 for s <= 0, 1 for s >= 1, C-infinity
double ramp(double s);

enum class CutoffKind { F_geq, F_leq, F_c };

// F_geq: 0 below threshold/2, 1 above 2*threshold (F_leq mirrored; F_c is the
// unit-threshold <= cutoff used in phase-space localization, same profile as F_leq)
struct CutoffProfile {
    CutoffKind kind;
    double threshold;
};

double cutoff_eval(const CutoffProfile& p, double v);

enum class Domain { space, frequency };

WaveFunction weight_apply(const WaveFunction& psi, double sigma);

// false when the threshold sits below twice the grid spacing of the stated
// domain; such cutoffs are applied anyway but callers should treat the result
// as unresolved (the near-threshold estimate truncates its sample set on it)
bool cutoff_resolved(const Grid& g, const CutoffProfile& p, Domain d);
WaveFunction cutoff_apply(const WaveFunction& psi, const CutoffProfile& p, Domain d);

// space <-> frequency transforms with the grid's convention (cartesian: FFT,
// radial: orthonormal DST-I). to_freq followed by from_freq is the identity.
VectorXcd to_freq(const Grid& g, const VectorXcd& space);
VectorXcd from_freq(const Grid& g, const VectorXcd& freq);

} // namespace dlab

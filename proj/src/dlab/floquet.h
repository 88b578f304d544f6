#pragma once
#include <string>
#include <vector>

#include "dlab/dynamics.h"
#include "dlab/spectral.h"

namespace dlab {

// Truncated frequency lattice over a radial base grid: all integer vectors
// n with |n_j| <= N_F, one copy of the base grid per cell. Stacked vectors
// are indexed cell-major: component (cell, x) at cell*points + x.
struct FloquetSystem {
    GridPtr base;
    VectorXd frequencies;
    int N_F = 6;
    std::vector<std::vector<int>> lattice;

    Eigen::Index cells() const { return Eigen::Index(lattice.size()); }
    Eigen::Index cell_index(const std::vector<int>& n) const;  // -1 when outside
    double shift(Eigen::Index cell) const;                     // sum_j n_j omega_j
};

FloquetSystem make_floquet_system(GridPtr base, VectorXd frequencies, int N_F,
                                  std::size_t memory_budget = std::size_t(2) << 30);

// K = H0 + V0 + sum_j n_j omega_j on the diagonal, drive profiles coupling
// n_j -> n_j +- 1 (sin: -+ i V_j/2, cos: V_j/2 both ways). Kept in operator
// form: one dense base-grid block plus neighbor maps, never the full matrix.
class FloquetOperator {
  public:
    FloquetOperator(FloquetSystem sys, const QuasiPeriodicPotential& V);

    const FloquetSystem& system() const { return sys_; }
    Eigen::Index dim() const { return sys_.cells() * sys_.base->points(); }
    VectorXcd apply(const VectorXcd& psi) const;

    // measured on deterministic probe pairs at assembly
    double hermiticity_defect() const { return defect_; }

    // spectral envelope of the truncated operator (free top, static-well
    // bottom, widened by the reachable lattice shifts)
    double lambda_max() const { return lmax_; }
    double lambda_min() const { return lmin_; }

    const spectral::EigenBasis& static_basis() const { return *hv_basis_; }
    const spectral::EigenBasis& free_basis() const { return *free_basis_; }

  private:
    FloquetSystem sys_;
    Eigen::MatrixXcd hv_;
    std::vector<VectorXd> profiles_;
    std::vector<DrivePhase> phase_kinds_;
    std::vector<std::vector<Eigen::Index>> up_, dn_;  // per frequency neighbor maps
    spectral::EigenBasisPtr hv_basis_, free_basis_;
    double lmax_ = 0, lmin_ = 0, defect_ = 0;
};

FloquetOperator assemble_K(const QuasiPeriodicPotential& V, const FloquetSystem& sys);

// e^{-itK} psi by a Chebyshev expansion of the exponential over the
// operator's spectral envelope; degree grows linearly with |t|.
VectorXcd cheb_propagate(const FloquetOperator& K, const VectorXcd& psi, double t);

// One representative eigenpair per gauge class (seeded from the static bound
// states); folded quasi-energies subtract the dominant cell's lattice shift.
struct FloquetSpectrum {
    FloquetSystem sys;
    VectorXd eigenvalues;
    VectorXd folded;
    std::vector<VectorXcd> eigenvectors;  // stacked, l2-normalized
    std::vector<bool> bound_flags;
    VectorXd lattice_tails;   // boundary-cell mass fraction
    VectorXd weighted_norms;  // <x>^3 norm ratio of the x-profile

    int bound_count() const;
};

FloquetSpectrum floquet_bound_states(const FloquetOperator& K);

// phi(x, s) = sum_n phi_n(x) e^{i sum_j n_j omega_j s_j}
WaveFunction floquet_state_at(const FloquetSpectrum& spec, std::size_t j, const VectorXd& s);

// projection onto the span of the bound classes evaluated at the torus point
// s (Gram solve, so it is idempotent even when the evaluations overlap)
WaveFunction apply_PFb(const FloquetSpectrum& spec, const WaveFunction& f, const VectorXd& s);

struct IdentityCheck {
    double deviation = 0.0;    // worst relative deviation over the battery
    double hermiticity = 0.0;  // probe defect of the assembled K
    bool truncation_dominated = false;
    std::string advice;
};

// e^{itH0} U(t,0) f against e^{itK0} e^{-itK} [f at lattice mode 0], unwound
// at the torus point s = t 1. Superlinear growth of the deviation between t/2
// and t marks the truncation as dominating.
IdentityCheck floquet_identity_check(const QuasiPeriodicPotential& V, const FloquetSystem& sys,
                                     double t);

// U(t, t+v) [free-flow cone cutoff at |x| <= v^alpha] U(t+v, t) psi
WaveFunction dynamic_projector(const QuasiPeriodicPotential& V, const WaveFunction& psi,
                               double t, double v_horizon, double alpha,
                               const PropagatorConfig& cfg = {});

// binary container "FLSP1" for spectra alongside the OPMX1 goldens
void write_flsp(const std::string& path, const FloquetSpectrum& spec);
FloquetSpectrum read_flsp(const std::string& path, GridPtr base);

}  // namespace dlab

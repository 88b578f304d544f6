#pragma once
#include <vector>
#include "dlab/grid.h"

namespace dlab {

enum class DrivePhase { sin_phase, cos_phase };

struct DriveComponent {
    VectorXd profile;      // V_j on the grid
    double omega = 0.0;
    DrivePhase phase = DrivePhase::sin_phase;
    double shift = 0.0;    // evaluated at omega*(t + shift); torus coordinate
};

struct QuasiPeriodicPotential {
    GridPtr grid;
    VectorXd V0;
    std::vector<DriveComponent> components;
    double weight_exponent = 7.0;
};

// V0 + sum_j V_j sin/cos(omega_j (t + shift_j)) pointwise
VectorXd potential_at(const QuasiPeriodicPotential& V, double t);

// frequency sanity (nonzero, pairwise distinct) and the <x>^delta localization
// bound on every profile; throws ConfigError with the offending path
void validate_potential(const QuasiPeriodicPotential& V);

struct PropagatorConfig {
    double dt = 1e-3;
    double t0 = 0.0;
};

// e^{-itH0}: frequency multiplier on cartesian and plain radial grids; on
// radial grids with a centrifugal term the cached eigendecomposition of the
// discrete H0 (exact for the discretization, so the group law still holds)
WaveFunction free_evolve(const WaveFunction& psi, double t);

// Strang-split U(t1, t0): half kinetic step, full potential phase at the
// midpoint time, half kinetic step. V == 0 with no drives collapses to the
// exact free propagator.
WaveFunction evolve(const WaveFunction& psi, double t0, double t1,
                    const QuasiPeriodicPotential& V, const PropagatorConfig& cfg);

// shipped model potentials (couplings chosen away from zero-energy resonances)
QuasiPeriodicPotential static_potential(GridPtr g, VectorXd V0, double delta = 7.0);
QuasiPeriodicPotential poschl_teller_line(const GridPtr& g);          // -2 sech^2 x
QuasiPeriodicPotential poschl_teller_radial(const GridPtr& g);        // -4 sech^2 r
QuasiPeriodicPotential gaussian_well(const GridPtr& g, double depth, double width);
// -6 e^{-(r/2)^2} plus 0.5 e^{-(r/2)^2} (sin at omega=1, cos at omega=sqrt 2)
QuasiPeriodicPotential driven_well(const GridPtr& g);

} // namespace dlab

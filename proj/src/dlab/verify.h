#pragma once
#include <map>
#include <string>
#include <vector>

#include "dlab/dynamics.h"
#include "dlab/grid.h"

namespace dlab {

enum class Verdict { pass, fail, inconclusive };
const char* verdict_name(Verdict v);

// One quantitative claim, fully materialized: the probed LHS curve, the
// reference envelope it must sit under, the fitted log-log exponent over the
// configured window, and the tight constant. params carries every knob that
// went into the run so the JSON sidecar is self-describing.
struct EstimateReport {
    std::string estimate_id;
    std::map<std::string, double> params;
    VectorXd t_samples;
    VectorXd lhs;
    VectorXd envelope;
    double fitted_exponent = 0.0;
    double bound_constant = 0.0;
    Verdict verdict = Verdict::inconclusive;
    double runtime = 0.0;  // seconds, wall clock
};

// least-squares power-law fit restricted to samples with lo <= t <= hi;
// returns {exponent, constant}
std::pair<double, double> fit_loglog(const VectorXd& t, const VectorXd& y, double lo,
                                     double hi);

// calibrated probe geometry for the shipped L = 400 boxes
std::vector<double> default_probe_times(const Grid& g);
double fit_window_lo(const Grid& g);
double fit_window_hi(const Grid& g);

EstimateReport estimate_high_energy(const GridPtr& g, double delta, double c,
                                    std::vector<double> t_samples = {});
EstimateReport estimate_pointwise_smoothing(const GridPtr& g, double delta, double c, double l,
                                            double v, std::vector<double> t_samples = {});
// quadrature of t^2 ||P+ F(|P|>c) e^{itH0} |P|^2 <x>^{-delta}|| over (0, 1]
// with a step-halving stability verdict and Richardson limit
EstimateReport estimate_time_smoothing(const GridPtr& g, double delta, double c);
// kappa(T) = max_f int_0^T ||<x>^{-delta} P+ e^{itH0} f||^2 dt, compared at T
// and 2T; delta <= 1 runs are exploratory and never report pass
EstimateReport estimate_microlocal_decay(const GridPtr& g, double delta, double T);
// shrinking cutoff F(|P| > <t>^{-(1/2-eps)}); radial n >= 5 switches to the
// unfiltered probe with the steeper -(n/4 - eps) target
EstimateReport estimate_near_threshold(const GridPtr& g, double delta, double eps,
                                       std::vector<double> t_samples = {});

enum class DecaySystem { static_well, quasi_periodic };

// I(T) = int_0^T ||<x>^{-eta} U(t,0) psi_c||^2 dt as a cumulative curve over
// [0, 2T]; verdict = Cauchy tail I(2T) - I(T) < 0.05 I(T). The static path
// projects bound states out itself; the quasi-periodic path requires a
// prepared scattering state and rejects inputs with bound-class overlap.
EstimateReport local_decay(DecaySystem sys, const QuasiPeriodicPotential& V,
                           const WaveFunction& psi0, double eta, double T);

// banded radial probe packet: Gaussian bump at r0 carrying carrier k0,
// cleaned by a super-Gaussian frequency window and normalized
WaveFunction band_packet(const GridPtr& g, double r0, double width, double k0, double kwidth);

struct Trajectory {
    GridPtr grid;
    double dt = 0.0;                // uniform frame spacing
    std::vector<VectorXcd> frames;  // frame j sampled at t = j dt
};

Trajectory sample_trajectory(const QuasiPeriodicPotential& V, const WaveFunction& psi0,
                             double T, double frame_dt, double micro_dt);

// q, p >= 2 and 2/q = n(1/2 - 1/p) to 1e-12, with the q = 2 endpoint only
// for n >= 3; throws ConfigError whose message carries the defect
void check_admissible(double q, double p, int n);

// ||psi||_{L^q_t L^p_x} by grid quadrature; verdict = finite and < 5% drift
// between the half and full trajectory
EstimateReport strichartz_norm(const Trajectory& traj, double q, double p, int n);

}  // namespace dlab

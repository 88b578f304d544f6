#include "dlab/dynamics.h"

#include <cmath>
#include <cstdio>

#include "dlab/fft.h"
#include "dlab/spectral.h"

namespace dlab {

VectorXd potential_at(const QuasiPeriodicPotential& V, double t) {
    VectorXd out = V.V0;
    for (const auto& c : V.components) {
        const double arg = c.omega * (t + c.shift);
        const double f = c.phase == DrivePhase::sin_phase ? std::sin(arg) : std::cos(arg);
        out += f * c.profile;
    }
    return out;
}

void validate_potential(const QuasiPeriodicPotential& V) {
    const Grid& g = *V.grid;
    const auto pts = g.points();
    if (V.V0.size() != pts)
        throw ConfigError("potential profile size does not match the grid", "potential.V0");
    for (size_t j = 0; j < V.components.size(); ++j) {
        char path[64];
        std::snprintf(path, sizeof path, "potential.components[%zu]", j);
        const auto& c = V.components[j];
        if (c.profile.size() != pts)
            throw ConfigError("drive profile size does not match the grid", std::string(path) + ".profile");
        if (c.omega == 0.0)
            throw ConfigError("drive frequency must be nonzero", std::string(path) + ".omega");
        for (size_t i = 0; i < j; ++i)
            if (V.components[i].omega == c.omega)
                throw ConfigError("drive frequencies must be pairwise distinct",
                                  std::string(path) + ".omega");
    }
    // localization: <x>^delta |V| must not peak at the box edge (a profile
    // whose weighted maximum sits in the outer band cannot satisfy the decay
    // assumption in the continuum limit)
    auto check_decay = [&](const VectorXd& prof, const std::string& path) {
        double best = 0.0, outer = 0.0;
        const double edge = 0.75 * g.L;
        for (Eigen::Index i = 0; i < pts; ++i) {
            const double r2 = g.r2(i);
            const double w = std::pow(1.0 + r2, V.weight_exponent / 2.0) * std::abs(prof[i]);
            best = std::max(best, w);
            if (r2 >= edge * edge) outer = std::max(outer, w);
        }
        if (!std::isfinite(best) || (best > 0.0 && outer >= 0.5 * best))
            throw ConfigError("potential fails the weighted localization bound", path);
    };
    check_decay(V.V0, "potential.V0");
    for (size_t j = 0; j < V.components.size(); ++j) {
        char path[64];
        std::snprintf(path, sizeof path, "potential.components[%zu].profile", j);
        check_decay(V.components[j].profile, path);
    }
}

namespace {

// multiplier e^{-i t k^2} in the grid's own spectral basis
VectorXcd free_multiplier_step(const Grid& g, const VectorXcd& amp, double t) {
    VectorXcd c = to_freq(g, amp);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        c[i] *= std::polar(1.0, -t * g.xi2(i));
    return from_freq(g, c);
}

bool needs_eigenprop(const Grid& g) {
    return g.mode == GridMode::radial && g.angular_term != 0.0;
}

} // namespace

WaveFunction free_evolve(const WaveFunction& psi, double t) {
    const Grid& g = *psi.grid;
    if (t == 0.0) return psi;
    if (needs_eigenprop(g)) {
        auto basis = spectral::free_radial_basis(psi.grid);
        return make_wave(psi.grid, spectral::eig_propagate(*basis, psi.amp, t));
    }
    return make_wave(psi.grid, free_multiplier_step(g, psi.amp, t));
}

WaveFunction evolve(const WaveFunction& psi, double t0, double t1,
                    const QuasiPeriodicPotential& V, const PropagatorConfig& cfg) {
    const Grid& g = *psi.grid;
    if (cfg.dt <= 0.0)
        throw ConfigError("time step must be positive", "propagator.dt");
    double xi2max = 0.0;
    for (Eigen::Index i = 0; i < g.freq.size(); ++i)
        xi2max = std::max(xi2max, g.freq[i] * g.freq[i]);
    if (g.mode == GridMode::cartesian) xi2max *= g.n;
    if (cfg.dt * xi2max >= M_PI)
        throw ConfigError("time step does not resolve the fastest free phase", "propagator.dt");

    const bool static_zero = V.components.empty() && V.V0.lpNorm<Eigen::Infinity>() == 0.0;
    if (static_zero)
        return free_evolve(psi, t1 - t0);

    const double span = t1 - t0;
    if (span == 0.0) return psi;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double total = std::abs(span);
    long nfull = long(std::floor(total / cfg.dt + 1e-9));
    double rem = total - double(nfull) * cfg.dt;
    if (rem < 1e-12 * std::max(1.0, total)) rem = 0.0;

    const VectorXd* ang = nullptr;
    VectorXd angvec;
    if (g.mode == GridMode::radial && g.angular_term != 0.0) {
        angvec = VectorXd(g.points());
        for (Eigen::Index i = 0; i < angvec.size(); ++i)
            angvec[i] = g.angular_term / g.r2(i);
        ang = &angvec;
    }

    // merged Strang chain: K(d/2) [P K(d)]^{m-1} P K(d/2) per uniform block
    VectorXcd u = psi.amp;
    double t = t0;
    auto phase_step = [&](double d, double tm) {
        const VectorXd Vt = potential_at(V, tm);
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            double ph = Vt[i];
            if (ang) ph += (*ang)[i];
            u[i] *= std::polar(1.0, -d * ph);
        }
    };
    auto run_block = [&](double d, long m) {
        if (m == 0) return;
        u = free_multiplier_step(g, u, dir * d / 2);
        for (long s = 0; s < m; ++s) {
            phase_step(dir * d, t + dir * (d / 2));
            t += dir * d;
            if (s + 1 < m) u = free_multiplier_step(g, u, dir * d);
        }
        u = free_multiplier_step(g, u, dir * d / 2);
    };
    run_block(cfg.dt, nfull);
    if (rem > 0.0) run_block(rem, 1);
    return make_wave(psi.grid, u);
}

QuasiPeriodicPotential static_potential(GridPtr g, VectorXd V0, double delta) {
    QuasiPeriodicPotential V;
    V.grid = std::move(g);
    V.V0 = std::move(V0);
    V.weight_exponent = delta;
    return V;
}

QuasiPeriodicPotential poschl_teller_line(const GridPtr& g) {
    if (g->mode != GridMode::cartesian || g->n != 1)
        throw ConfigError("Poschl-Teller line preset needs a 1D cartesian grid", "potential.preset");
    VectorXd V0(g->points());
    for (Eigen::Index i = 0; i < V0.size(); ++i) {
        const double c = std::cosh(g->axis[i]);
        V0[i] = -2.0 / (c * c);
    }
    return static_potential(g, std::move(V0));
}

QuasiPeriodicPotential poschl_teller_radial(const GridPtr& g) {
    if (g->mode != GridMode::radial)
        throw ConfigError("radial Poschl-Teller preset needs a radial grid", "potential.preset");
    VectorXd V0(g->points());
    for (Eigen::Index i = 0; i < V0.size(); ++i) {
        const double c = std::cosh(g->axis[i]);
        V0[i] = -4.0 / (c * c);
    }
    return static_potential(g, std::move(V0));
}

QuasiPeriodicPotential gaussian_well(const GridPtr& g, double depth, double width) {
    VectorXd V0(g->points());
    for (Eigen::Index i = 0; i < V0.size(); ++i) {
        const double r2 = g->r2(i);
        V0[i] = -depth * std::exp(-r2 / (width * width));
    }
    return static_potential(g, std::move(V0));
}

QuasiPeriodicPotential driven_well(const GridPtr& g) {
    QuasiPeriodicPotential V = gaussian_well(g, 6.0, 2.0);
    VectorXd prof(g->points());
    for (Eigen::Index i = 0; i < prof.size(); ++i)
        prof[i] = 0.5 * std::exp(-g->r2(i) / 4.0);
    V.components.push_back({prof, 1.0, DrivePhase::sin_phase, 0.0});
    V.components.push_back({prof, std::sqrt(2.0), DrivePhase::cos_phase, 0.0});
    return V;
}

} // namespace dlab

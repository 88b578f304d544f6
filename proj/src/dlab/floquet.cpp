#include "dlab/floquet.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dlab/microlocal.h"
#include "dlab/rng.h"

namespace dlab {
namespace {

constexpr double kFreqTol = 1e-12;

void write_u32(std::ofstream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
void write_f64(std::ofstream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
uint32_t read_u32(std::ifstream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double read_f64(std::ifstream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace

Eigen::Index FloquetSystem::cell_index(const std::vector<int>& n) const {
    const int w = 2 * N_F + 1;
    Eigen::Index idx = 0;
    for (std::size_t j = 0; j < n.size(); ++j) {
        if (std::abs(n[j]) > N_F) return -1;
        idx = idx * w + (n[j] + N_F);
    }
    return idx;
}

double FloquetSystem::shift(Eigen::Index cell) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < frequencies.size(); ++j)
        s += lattice[std::size_t(cell)][std::size_t(j)] * frequencies[j];
    return s;
}

FloquetSystem make_floquet_system(GridPtr base, VectorXd frequencies, int N_F,
                                  std::size_t memory_budget) {
    if (!base || base->mode != GridMode::radial)
        throw ConfigError("floquet systems live over radial base grids", "grid.mode");
    if (frequencies.size() < 1)
        throw ConfigError("at least one frequency required", "floquet.frequencies");
    for (Eigen::Index j = 0; j < frequencies.size(); ++j) {
        if (frequencies[j] == 0.0)
            throw ConfigError("frequencies must be nonzero", "floquet.frequencies");
        for (Eigen::Index i = 0; i < j; ++i)
            if (std::abs(frequencies[i] - frequencies[j]) < kFreqTol)
                throw ConfigError("frequencies must be pairwise distinct",
                                  "floquet.frequencies");
    }
    if (N_F < 1) throw ConfigError("truncation must be at least 1", "floquet.N_F");

    FloquetSystem sys;
    sys.base = std::move(base);
    sys.frequencies = std::move(frequencies);
    sys.N_F = N_F;
    const int nfreq = int(sys.frequencies.size());
    const int w = 2 * N_F + 1;
    std::size_t cells = 1;
    for (int j = 0; j < nfreq; ++j) cells *= std::size_t(w);
    // a handful of stacked complex vectors must fit alongside the dense block
    const std::size_t bytes = cells * std::size_t(sys.base->points()) * 16 * 8;
    if (bytes > memory_budget)
        throw ConfigError("frequency lattice exceeds the memory budget", "floquet.N_F");

    sys.lattice.assign(cells, std::vector<int>(nfreq, -N_F));
    std::vector<int> cur(nfreq, -N_F);
    for (std::size_t i = 0; i < cells; ++i) {
        sys.lattice[i] = cur;
        for (int j = nfreq - 1; j >= 0; --j) {
            if (++cur[std::size_t(j)] <= N_F) break;
            cur[std::size_t(j)] = -N_F;
        }
    }
    return sys;
}

FloquetOperator::FloquetOperator(FloquetSystem sys, const QuasiPeriodicPotential& V)
    : sys_(std::move(sys)) {
    const GridPtr& g = sys_.base;
    if (V.grid->mode != g->mode || V.grid->N != g->N || V.grid->L != g->L ||
        V.grid->n != g->n)
        throw ConfigError("potential grid does not match the floquet base", "grid");
    const Eigen::Index nfreq = sys_.frequencies.size();
    if (Eigen::Index(V.components.size()) != nfreq)
        throw ConfigError("potential components do not match the system frequencies",
                          "floquet.frequencies");
    for (Eigen::Index j = 0; j < nfreq; ++j) {
        const DriveComponent& c = V.components[std::size_t(j)];
        if (std::abs(c.omega - sys_.frequencies[j]) > kFreqTol)
            throw ConfigError("potential components do not match the system frequencies",
                              "floquet.frequencies");
        if (c.shift != 0.0)
            throw ConfigError("assemble the lift at the torus origin (zero shifts)",
                              "potential.components");
        profiles_.push_back(c.profile);
        phase_kinds_.push_back(c.phase);
    }

    const Eigen::Index M = g->points();
    const VectorXd V0 = V.V0.size() ? V.V0 : VectorXd::Zero(M);
    const Eigen::MatrixXd hv_real = spectral::radial_h_matrix(*g, &V0);
    hv_ = hv_real.cast<complexd>();
    {
        char tag[32];
        uint64_t hsh = 1469598103934665603ull;
        const auto* bytes = reinterpret_cast<const unsigned char*>(V0.data());
        for (Eigen::Index i = 0; i < V0.size() * Eigen::Index(sizeof(double)); ++i) {
            hsh ^= bytes[i];
            hsh *= 1099511628211ull;
        }
        std::snprintf(tag, sizeof tag, "v%016llx", static_cast<unsigned long long>(hsh));
        hv_basis_ = spectral::full_radial_basis(g, V0, tag);
    }
    free_basis_ = spectral::free_radial_basis(g);

    double reach = 1.0;
    for (Eigen::Index j = 0; j < nfreq; ++j)
        reach += sys_.N_F * std::abs(sys_.frequencies[j]);
    lmax_ = free_basis_->evals.maxCoeff() + reach;
    lmin_ = hv_basis_->evals.minCoeff() - reach;

    // neighbor maps per frequency
    const Eigen::Index B = sys_.cells();
    up_.assign(std::size_t(nfreq), std::vector<Eigen::Index>(std::size_t(B), -1));
    dn_ = up_;
    for (Eigen::Index i = 0; i < B; ++i) {
        std::vector<int> n = sys_.lattice[std::size_t(i)];
        for (Eigen::Index j = 0; j < nfreq; ++j) {
            ++n[std::size_t(j)];
            up_[std::size_t(j)][std::size_t(i)] = sys_.cell_index(n);
            n[std::size_t(j)] -= 2;
            dn_[std::size_t(j)][std::size_t(i)] = sys_.cell_index(n);
            ++n[std::size_t(j)];
        }
    }

    // hermiticity defect on deterministic probe pairs
    Rng rng(911);
    double worst = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
        VectorXcd u(dim()), v(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) {
            u[i] = complexd(rng.normal(), rng.normal());
            v[i] = complexd(rng.normal(), rng.normal());
        }
        u /= u.norm();
        v /= v.norm();
        const complexd a = u.dot(apply(v));
        const complexd b = apply(u).dot(v);
        worst = std::max(worst, std::abs(a - b));
    }
    defect_ = worst;
}

VectorXcd FloquetOperator::apply(const VectorXcd& psi) const {
    const Eigen::Index M = sys_.base->points();
    const Eigen::Index B = sys_.cells();
    if (psi.size() != B * M)
        throw ConfigError("stacked vector does not match the lattice", "floquet.state");
    VectorXcd out(B * M);
    for (Eigen::Index i = 0; i < B; ++i)
        out.segment(i * M, M).noalias() =
            hv_ * psi.segment(i * M, M) + sys_.shift(i) * psi.segment(i * M, M);
    for (std::size_t j = 0; j < profiles_.size(); ++j) {
        const VectorXd& p = profiles_[j];
        const bool is_sin = phase_kinds_[j] == DrivePhase::sin_phase;
        const complexd c_up = is_sin ? complexd(0.0, -0.5) : complexd(0.5, 0.0);
        const complexd c_dn = is_sin ? complexd(0.0, +0.5) : complexd(0.5, 0.0);
        for (Eigen::Index i = 0; i < B; ++i) {
            const auto src = psi.segment(i * M, M);
            const Eigen::Index iu = up_[j][std::size_t(i)];
            if (iu >= 0)
                out.segment(iu * M, M).array() += c_up * p.array().cast<complexd>() * src.array();
            const Eigen::Index id = dn_[j][std::size_t(i)];
            if (id >= 0)
                out.segment(id * M, M).array() += c_dn * p.array().cast<complexd>() * src.array();
        }
    }
    return out;
}

FloquetOperator assemble_K(const QuasiPeriodicPotential& V, const FloquetSystem& sys) {
    return FloquetOperator(sys, V);
}

VectorXcd cheb_propagate(const FloquetOperator& K, const VectorXcd& psi, double t) {
    if (t == 0.0) return psi;
    const double c = 0.5 * (K.lambda_max() + K.lambda_min());
    const double R = 0.5 * (K.lambda_max() - K.lambda_min());
    const double x = R * std::abs(t);
    const int deg = int(x) + 60;
    const double sgn_t = (t > 0) ? 1.0 : -1.0;

    auto kt = [&](const VectorXcd& u) { return ((K.apply(u) - c * u) / R).eval(); };
    VectorXcd Tm = psi;
    VectorXcd T = kt(psi);
    // e^{-izy} = J_0(z) + 2 sum_k (-i)^k J_k(z) T_k(y); negative t flips the phase
    VectorXcd out = std::cyl_bessel_j(0, x) * Tm;
    complexd ik(0.0, -sgn_t);
    out += 2.0 * ik * std::cyl_bessel_j(1, x) * T;
    for (int k = 2; k <= deg; ++k) {
        VectorXcd Tn = 2.0 * kt(T) - Tm;
        ik *= complexd(0.0, -sgn_t);
        const double jk = std::cyl_bessel_j(unsigned(k), x);
        if (jk != 0.0) out += (2.0 * ik * jk) * Tn;
        Tm.swap(T);
        T.swap(Tn);
    }
    return std::polar(1.0, -c * t) * out;
}

int FloquetSpectrum::bound_count() const {
    int n = 0;
    for (bool b : bound_flags) n += b ? 1 : 0;
    return n;
}

FloquetSpectrum floquet_bound_states(const FloquetOperator& K) {
    const FloquetSystem& sys = K.system();
    const Eigen::Index M = sys.base->points();
    const Eigen::Index B = sys.cells();
    const spectral::EigenBasis& hb = K.static_basis();

    std::vector<Eigen::Index> seeds;
    for (Eigen::Index b = 0; b < hb.evals.size() && hb.evals[b] < -1e-6; ++b)
        seeds.push_back(b);

    FloquetSpectrum spec;
    spec.sys = sys;
    spec.eigenvalues.resize(Eigen::Index(seeds.size()));
    spec.folded.resize(Eigen::Index(seeds.size()));
    spec.lattice_tails.resize(Eigen::Index(seeds.size()));
    spec.weighted_norms.resize(Eigen::Index(seeds.size()));
    if (seeds.empty()) return spec;

    const std::vector<int> origin(std::size_t(sys.frequencies.size()), 0);
    const Eigen::Index cell0 = sys.cell_index(origin);
    VectorXd shifts(B);
    for (Eigen::Index i = 0; i < B; ++i) shifts[i] = sys.shift(i);

    for (std::size_t cls = 0; cls < seeds.size(); ++cls) {
        VectorXcd x = VectorXcd::Zero(B * M);
        x.segment(cell0 * M, M) = hb.evecs.col(seeds[cls]).cast<complexd>();
        double sig = hb.evals[seeds[cls]];
        double res = 1.0;
        for (int it = 0; it < 6 && res > 1e-9; ++it) {
            const double sh = sig;
            auto op = [&](const VectorXcd& u) { return (K.apply(u) - sh * u).eval(); };
            auto pre = [&](const VectorXcd& u) {
                VectorXcd out(B * M);
                for (Eigen::Index i = 0; i < B; ++i) {
                    VectorXd cr = hb.evecs.transpose() * u.segment(i * M, M).real();
                    VectorXd ci = hb.evecs.transpose() * u.segment(i * M, M).imag();
                    for (Eigen::Index m = 0; m < M; ++m) {
                        double den = hb.evals[m] + shifts[i] - sh;
                        if (std::abs(den) < 0.05) den = (den >= 0 ? 0.05 : -0.05);
                        cr[m] /= den;
                        ci[m] /= den;
                    }
                    out.segment(i * M, M).real() = hb.evecs * cr;
                    out.segment(i * M, M).imag() = hb.evecs * ci;
                }
                return out;
            };
            VectorXcd sol = VectorXcd::Zero(B * M);
            spectral::gmres(op, x, sol, pre, 1e-10, 80, 5);
            const double nrm = sol.norm();
            if (!(nrm > 0) || !std::isfinite(nrm)) break;
            x = sol / nrm;
            const VectorXcd kx = K.apply(x);
            sig = x.dot(kx).real();
            res = (kx - sig * x).norm();
        }
        if (!(res <= 1e-8)) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "floquet class %zu did not converge: residual %.3e", cls, res);
            throw DomainError("solver", buf);
        }

        // dominant cell, folded representative, boundary tail
        Eigen::Index dom = 0;
        double best = -1.0, tailmass = 0.0;
        for (Eigen::Index i = 0; i < B; ++i) {
            const double m = x.segment(i * M, M).squaredNorm();
            if (m > best) {
                best = m;
                dom = i;
            }
            int linf = 0;
            for (int nj : sys.lattice[std::size_t(i)]) linf = std::max(linf, std::abs(nj));
            if (linf == sys.N_F) tailmass += m;
        }
        if (tailmass > 1e-3) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "lattice boundary holds %.3e of the mass; raise N_F", tailmass);
            throw DomainError("truncation-too-small", buf);
        }
        double wmass = 0.0;
        for (Eigen::Index i = 0; i < B; ++i)
            for (Eigen::Index m = 0; m < M; ++m) {
                const double w = 1.0 + sys.base->r2(m);
                wmass += w * w * w * std::norm(x[i * M + m]);
            }

        spec.eigenvalues[Eigen::Index(cls)] = sig;
        spec.folded[Eigen::Index(cls)] = sig - shifts[dom];
        spec.lattice_tails[Eigen::Index(cls)] = tailmass;
        spec.weighted_norms[Eigen::Index(cls)] = std::sqrt(wmass);
        spec.eigenvectors.push_back(x);
        spec.bound_flags.push_back(tailmass < 1e-6 &&
                                   spec.weighted_norms[Eigen::Index(cls)] < 1e3);
    }

    // distinct classes are near-orthogonal already; make it exact
    for (std::size_t j = 1; j < spec.eigenvectors.size(); ++j) {
        VectorXcd& v = spec.eigenvectors[j];
        for (std::size_t i = 0; i < j; ++i)
            v -= spec.eigenvectors[i].dot(v) * spec.eigenvectors[i];
        v /= v.norm();
    }
    return spec;
}

WaveFunction floquet_state_at(const FloquetSpectrum& spec, std::size_t j, const VectorXd& s) {
    if (j >= spec.eigenvectors.size())
        throw ConfigError("no such floquet class", "floquet.class");
    if (s.size() != spec.sys.frequencies.size())
        throw ConfigError("torus point dimension mismatch", "floquet.s");
    const Eigen::Index M = spec.sys.base->points();
    const Eigen::Index B = spec.sys.cells();
    VectorXcd out = VectorXcd::Zero(M);
    for (Eigen::Index i = 0; i < B; ++i) {
        double ph = 0.0;
        for (Eigen::Index f = 0; f < s.size(); ++f)
            ph += spec.sys.lattice[std::size_t(i)][std::size_t(f)] * spec.sys.frequencies[f] *
                  s[f];
        out += std::polar(1.0, ph) * spec.eigenvectors[j].segment(i * M, M);
    }
    return make_wave(spec.sys.base, std::move(out));
}

WaveFunction apply_PFb(const FloquetSpectrum& spec, const WaveFunction& f, const VectorXd& s) {
    const GridPtr& g = spec.sys.base;
    if (f.grid->mode != g->mode || f.grid->N != g->N || f.grid->L != g->L)
        throw ConfigError("input lives on a different grid", "floquet.state");
    std::vector<WaveFunction> evals;
    for (std::size_t j = 0; j < spec.eigenvectors.size(); ++j)
        if (spec.bound_flags[j]) evals.push_back(floquet_state_at(spec, j, s));
    WaveFunction out = make_wave(g, VectorXcd::Zero(g->points()));
    if (evals.empty()) return out;

    const Eigen::Index k = Eigen::Index(evals.size());
    Eigen::MatrixXcd G(k, k);
    VectorXcd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) G(a, b) = evals[std::size_t(a)].inner(evals[std::size_t(b)]);
        rhs[a] = evals[std::size_t(a)].inner(f);
    }
    const VectorXcd coef = G.partialPivLu().solve(rhs);
    for (Eigen::Index a = 0; a < k; ++a) out.amp += coef[a] * evals[std::size_t(a)].amp;
    return out;
}

namespace {

// deterministic base-grid battery for the identity check: localized bumps
// with low carriers, well separated from both ends of the box
std::vector<WaveFunction> identity_battery(const GridPtr& g) {
    struct Spec {
        double center, width, carrier;
    };
    const Spec specs[] = {{12.0, 3.0, 1.2}, {8.0, 4.0, 0.9}, {15.0, 3.5, 1.1}};
    std::vector<WaveFunction> out;
    for (const Spec& sp : specs) {
        VectorXcd amp(g->points());
        for (Eigen::Index i = 0; i < g->points(); ++i) {
            const double r = g->axis[i];
            const double e = (r - sp.center) / sp.width;
            amp[i] = std::exp(-e * e) * std::sin(sp.carrier * r);
        }
        WaveFunction w = make_wave(g, std::move(amp));
        w.amp /= w.norm();
        out.push_back(std::move(w));
    }
    return out;
}

double identity_deviation(const QuasiPeriodicPotential& V, const FloquetOperator& K,
                          double t) {
    const FloquetSystem& sys = K.system();
    const GridPtr& g = sys.base;
    const Eigen::Index M = g->points();
    const Eigen::Index B = sys.cells();
    const std::vector<int> origin(std::size_t(sys.frequencies.size()), 0);
    const Eigen::Index cell0 = sys.cell_index(origin);
    PropagatorConfig cfg;
    cfg.dt = 2.5e-4;

    double worst = 0.0;
    for (const WaveFunction& f : identity_battery(g)) {
        const WaveFunction lhs = free_evolve(evolve(f, 0.0, t, V, cfg), -t);
        VectorXcd stacked = VectorXcd::Zero(B * M);
        stacked.segment(cell0 * M, M) = f.amp;
        const VectorXcd prop = cheb_propagate(K, stacked, t);
        VectorXcd rhs = VectorXcd::Zero(M);
        for (Eigen::Index i = 0; i < B; ++i) {
            VectorXcd blk =
                spectral::eig_propagate(K.free_basis(), prop.segment(i * M, M), -t);
            rhs += std::polar(1.0, t * sys.shift(i)) * blk;
        }
        worst = std::max(worst, (lhs.amp - rhs).norm() / f.amp.norm());
    }
    return worst;
}

}  // namespace

IdentityCheck floquet_identity_check(const QuasiPeriodicPotential& V, const FloquetSystem& sys,
                                     double t) {
    if (t < 0) throw ConfigError("identity check runs forward in time", "floquet.t");
    const FloquetOperator K = assemble_K(V, sys);
    IdentityCheck out;
    out.hermiticity = K.hermiticity_defect();
    if (t == 0.0) return out;
    out.deviation = identity_deviation(V, K, t);
    const double half = identity_deviation(V, K, t / 2);
    if (out.deviation > 2.2 * half + 1e-12) {
        out.truncation_dominated = true;
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "deviation grows superlinearly on [%.3g, %.3g]; raise N_F above %d",
                      t / 2, t, sys.N_F);
        out.advice = buf;
    }
    return out;
}

WaveFunction dynamic_projector(const QuasiPeriodicPotential& V, const WaveFunction& psi,
                               double t, double v_horizon, double alpha,
                               const PropagatorConfig& cfg) {
    if (!(v_horizon > 0))
        throw ConfigError("projector horizon must be positive", "projector.v_horizon");
    const int n = psi.grid->n;
    if (!(alpha > 0.0 && alpha < 1.0 - 2.0 / n))
        throw ConfigError("alpha must lie in (0, 1 - 2/n)", "projector.alpha");
    const WaveFunction fwd = evolve(psi, t, t + v_horizon, V, cfg);
    const CutoffProfile cone{CutoffKind::F_c, 1.0};
    const WaveFunction cut = phase_space_cutoff(fwd, v_horizon, alpha, cone);
    return evolve(cut, t + v_horizon, t, V, cfg);
}

void write_flsp(const std::string& path, const FloquetSpectrum& spec) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DomainError("io", "cannot open " + tmp + " for writing");
        os.write("FLSP1", 5);
        write_u32(os, uint32_t(spec.sys.frequencies.size()));
        for (Eigen::Index j = 0; j < spec.sys.frequencies.size(); ++j)
            write_f64(os, spec.sys.frequencies[j]);
        write_u32(os, uint32_t(spec.sys.N_F));
        write_u32(os, uint32_t(spec.sys.base->points()));
        write_u32(os, uint32_t(spec.eigenvectors.size()));
        for (std::size_t j = 0; j < spec.eigenvectors.size(); ++j) {
            write_f64(os, spec.eigenvalues[Eigen::Index(j)]);
            write_f64(os, spec.folded[Eigen::Index(j)]);
            write_f64(os, spec.lattice_tails[Eigen::Index(j)]);
            write_f64(os, spec.weighted_norms[Eigen::Index(j)]);
            const char flag = spec.bound_flags[j] ? 1 : 0;
            os.write(&flag, 1);
            const VectorXcd& v = spec.eigenvectors[j];
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const float pair[2] = {float(v[i].real()), float(v[i].imag())};
                os.write(reinterpret_cast<const char*>(pair), 8);
            }
        }
        if (!os) throw DomainError("io", "short write on " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

FloquetSpectrum read_flsp(const std::string& path, GridPtr base) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("io", "cannot open " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "FLSP1", 5) != 0)
        throw DomainError("io", path + " is not an FLSP1 container");
    const uint32_t nfreq = read_u32(is);
    VectorXd freqs(nfreq);
    for (uint32_t j = 0; j < nfreq; ++j) freqs[j] = read_f64(is);
    const uint32_t nf = read_u32(is);
    const uint32_t pts = read_u32(is);
    if (Eigen::Index(pts) != base->points())
        throw DomainError("io", "base grid does not match the stored spectrum");
    FloquetSpectrum spec;
    spec.sys = make_floquet_system(std::move(base), std::move(freqs), int(nf));
    const uint32_t ncls = read_u32(is);
    spec.eigenvalues.resize(ncls);
    spec.folded.resize(ncls);
    spec.lattice_tails.resize(ncls);
    spec.weighted_norms.resize(ncls);
    const Eigen::Index dim = spec.sys.cells() * spec.sys.base->points();
    for (uint32_t j = 0; j < ncls; ++j) {
        spec.eigenvalues[j] = read_f64(is);
        spec.folded[j] = read_f64(is);
        spec.lattice_tails[j] = read_f64(is);
        spec.weighted_norms[j] = read_f64(is);
        char flag = 0;
        is.read(&flag, 1);
        spec.bound_flags.push_back(flag != 0);
        VectorXcd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            float pair[2];
            is.read(reinterpret_cast<char*>(pair), 8);
            v[i] = complexd(pair[0], pair[1]);
        }
        spec.eigenvectors.push_back(std::move(v));
    }
    if (!is) throw DomainError("io", "truncated FLSP1 container " + path);
    return spec;
}

}  // namespace dlab

#include "dlab/scattering.h"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>

#include "dlab/mellin.h"
#include "dlab/spectral.h"

namespace dlab {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

// stable tag for disk-cached eigendecompositions keyed by the potential data
std::string potential_tag(const VectorXd& v) {
    uint64_t hsh = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    for (Eigen::Index i = 0; i < v.size() * Eigen::Index(sizeof(double)); ++i) {
        hsh ^= bytes[i];
        hsh *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "v%016llx", static_cast<unsigned long long>(hsh));
    return buf;
}

// effective static potential on the flattened grid, centrifugal term included
VectorXd effective_potential(const Grid& g, const VectorXd& V0) {
    VectorXd w = V0.size() ? V0 : VectorXd::Zero(g.points());
    if (g.mode == GridMode::radial && g.angular_term != 0.0)
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] += g.angular_term / g.r2(i);
    return w;
}

VectorXcd apply_h_spectral(const Grid& g, const VectorXd& w, const VectorXcd& u) {
    VectorXcd c = to_freq(g, u);
    for (Eigen::Index m = 0; m < c.size(); ++m) c[m] *= g.xi2(m);
    VectorXcd out = from_freq(g, c);
    out.array() += w.array().cast<complexd>() * u.array();
    return out;
}

VectorXd fd_inverse_iterate(const VectorXd& diag, const VectorXd& off, double E) {
    const int n = int(diag.size());
    VectorXd v = VectorXd::Ones(n);
    v.normalize();
    for (int pass = 0; pass < 4; ++pass) {
        VectorXd dl = off, d = diag.array() - (E + 1e-11), du = off;
        const int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, dl.data(), d.data(),
                                       du.data(), v.data(), n);
        if (info != 0)
            throw DomainError("solver", "tridiagonal solve failed while seeding eigenvector");
        v.normalize();
    }
    return v;
}

// orthonormal DST-I matrix (symmetric, its own inverse)
MatrixXd sine_matrix(Eigen::Index M) {
    MatrixXd S(M, M);
    const double c = M_PI / double(M + 1);
    const double scale = std::sqrt(2.0 / double(M + 1));
    for (Eigen::Index i = 0; i < M; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = scale * std::sin(c * double(i + 1) * double(j + 1));
            S(i, j) = v;
            S(j, i) = v;
        }
    return S;
}

void check_static_radial_swave(const QuasiPeriodicPotential& V, const char* what) {
    if (!V.components.empty())
        throw ConfigError(std::string(what) + " needs a static potential",
                          "potential.components");
    const Grid& g = *V.grid;
    if (g.mode != GridMode::radial)
        throw ConfigError(std::string(what) + " runs on radial grids", "grid.mode");
    if (g.angular_term != 0.0)
        throw ConfigError(std::string(what) + " needs an s-wave grid (n = 1 or 3)", "grid.n");
}

// ---- dense machinery shared by representation_residual and assemble_C ----
//
// Everything here lives on the s-wave sine grid, where H0 is diagonal with
// symbol k^2 and the u-integral of e^{iuH0} A e^{-iuH0} has the closed form
// (e^{i dE T} - 1)/(i dE) entrywise.

struct DenseScatter {
    GridPtr grid;
    VectorXd V0;
    spectral::EigenBasisPtr full;    // eigenpairs of H0 + V
    std::vector<VectorXd> bound;     // l2-normalized bound columns
    MatrixXd S;                      // DST-I
    VectorXd k2;
};

DenseScatter dense_setup(const QuasiPeriodicPotential& V) {
    DenseScatter ds;
    ds.grid = V.grid;
    const Eigen::Index M = ds.grid->points();
    ds.V0 = V.V0.size() ? V.V0 : VectorXd::Zero(M);
    ds.full = spectral::full_radial_basis(ds.grid, ds.V0, potential_tag(ds.V0));
    for (Eigen::Index j = 0; j < ds.full->evals.size() && ds.full->evals[j] < -1e-6; ++j)
        ds.bound.push_back(ds.full->evecs.col(j));
    ds.S = sine_matrix(M);
    ds.k2.resize(M);
    for (Eigen::Index m = 0; m < M; ++m) ds.k2[m] = ds.grid->xi2(m);
    return ds;
}

// W*(T) = e^{i sgn T H0} e^{-i sgn T H} P_c as a dense pair (real, imag)
void wstar_dense(const DenseScatter& ds, double T, int sgn, MatrixXd& outR, MatrixXd& outI) {
    const MatrixXd& U = ds.full->evecs;
    const VectorXd& ev = ds.full->evals;
    const Eigen::Index M = U.rows();
    MatrixXd Uc = U, Us = U;
    for (Eigen::Index j = 0; j < M; ++j) {
        Uc.col(j) *= std::cos(sgn * T * ev[j]);
        Us.col(j) *= -std::sin(sgn * T * ev[j]);
    }
    MatrixXd EvR = Uc * U.transpose();
    MatrixXd EvI = Us * U.transpose();
    for (const VectorXd& p : ds.bound) {
        EvR.noalias() -= (EvR * p) * p.transpose();
        EvI.noalias() -= (EvI * p) * p.transpose();
    }
    MatrixXd Tr = ds.S * EvR;
    MatrixXd Ti = ds.S * EvI;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double cph = std::cos(sgn * T * ds.k2[m]);
        const double sph = std::sin(sgn * T * ds.k2[m]);
        for (Eigen::Index j = 0; j < M; ++j) {
            const double re = Tr(m, j), im = Ti(m, j);
            Tr(m, j) = cph * re - sph * im;
            Ti(m, j) = sph * re + cph * im;
        }
    }
    outR.noalias() = ds.S * Tr;
    outI.noalias() = ds.S * Ti;
}

// sine-basis kernel of W* V
void q_kernel(const DenseScatter& ds, const MatrixXd& WR, const MatrixXd& WI,
              MatrixXd& QR, MatrixXd& QI) {
    MatrixXd VS = ds.V0.asDiagonal() * ds.S;
    QR.noalias() = ds.S * (WR * VS).eval();
    QI.noalias() = ds.S * (WI * VS).eval();
}

complexd em_entry(double dE, double T, int sgn) {
    if (std::abs(dE) < 1e-14) return complexd(T, 0.0);
    const complexd num = std::polar(1.0, sgn * dE * T) - 1.0;
    return num / complexd(0.0, sgn * dE);
}

// in-process caches for the expensive grid-level objects
std::mutex dense_mutex;
std::map<std::string, std::shared_ptr<const MatrixXcd>> sector_cache;  // Mellin P+ matrices
std::map<std::string, std::shared_ptr<const MatrixXcd>> cmat_cache;    // C on the grid

std::string grid_key(const Grid& g) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "m%d_n%d_L%.9g_N%d_a%.9g", int(g.mode), g.n, g.L, g.N,
                  g.angular_term);
    return buf;
}

std::shared_ptr<const MatrixXcd> sector_matrix(const GridPtr& g) {
    const std::string key = grid_key(*g);
    {
        std::lock_guard<std::mutex> lk(dense_mutex);
        auto it = sector_cache.find(key);
        if (it != sector_cache.end()) return it->second;
    }
    const Eigen::Index M = g->points();
    MellinProjector proj(g);
    auto Kp = std::make_shared<MatrixXcd>(M, M);
    WaveFunction unit = make_wave(g, VectorXcd::Zero(M));
    for (Eigen::Index j = 0; j < M; ++j) {
        unit.amp.setZero();
        unit.amp[j] = 1.0;
        Kp->col(j) = proj.apply(unit).amp;
    }
    std::lock_guard<std::mutex> lk(dense_mutex);
    auto [it, inserted] = sector_cache.emplace(key, std::move(Kp));
    (void)inserted;
    return it->second;
}

std::shared_ptr<const MatrixXcd> c_grid_matrix(const QuasiPeriodicPotential& V, double T) {
    const std::string key =
        grid_key(*V.grid) + "_" + potential_tag(V.V0) + "_T" + std::to_string(T);
    {
        std::lock_guard<std::mutex> lk(dense_mutex);
        auto it = cmat_cache.find(key);
        if (it != cmat_cache.end()) return it->second;
    }
    DenseScatter ds = dense_setup(V);
    const Eigen::Index M = ds.S.rows();
    auto Kp = sector_matrix(V.grid);
    auto C = std::make_shared<MatrixXcd>(MatrixXcd::Zero(M, M));
    MatrixXd WR(M, M), WI(M, M), QR(M, M), QI(M, M);
    for (int sgn : {+1, -1}) {
        wstar_dense(ds, T, sgn, WR, WI);
        q_kernel(ds, WR, WI, QR, QI);
        MatrixXcd QEm(M, M);
        for (Eigen::Index i = 0; i < M; ++i)
            for (Eigen::Index j = 0; j < M; ++j)
                QEm(i, j) = complexd(QR(i, j), QI(i, j)) * em_entry(ds.k2[i] - ds.k2[j], T, sgn);
        // back to position space on both sides
        MatrixXd IR = ds.S * (QEm.real() * ds.S).eval();
        MatrixXd II = ds.S * (QEm.imag() * ds.S).eval();
        MatrixXcd Imat(M, M);
        Imat.real() = IR;
        Imat.imag() = II;
        MatrixXcd P = (sgn > 0) ? *Kp : (MatrixXcd::Identity(M, M) - *Kp);
        C->noalias() += complexd(0.0, double(sgn)) * (P * Imat);
    }
    std::lock_guard<std::mutex> lk(dense_mutex);
    auto [it, inserted] = cmat_cache.emplace(key, std::move(C));
    (void)inserted;
    return it->second;
}

void write_u32(std::ofstream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::ifstream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

SpectralData bound_states(const QuasiPeriodicPotential& V, double eps_gap) {
    if (!V.components.empty())
        throw ConfigError("bound_states expects a static potential", "potential.components");
    const GridPtr& g = V.grid;
    if (g->mode == GridMode::cartesian && g->n != 1)
        throw ConfigError("bound_states supports 1-d cartesian and radial grids", "grid.n");
    const Eigen::Index M = g->points();
    const VectorXd w = effective_potential(*g, V.V0);

    // locate the discrete spectrum on the finite-difference surrogate
    const double ih2 = 1.0 / (g->h * g->h);
    const VectorXd fd_diag = w.array() + 2.0 * ih2;
    const VectorXd fd_off = VectorXd::Constant(M - 1, -ih2);
    const int nb = spectral::sturm_count_below(fd_diag, fd_off, -eps_gap);
    const int n0 = spectral::sturm_count_below(fd_diag, fd_off, 0.0);
    if (n0 > nb)
        throw DomainError("near-threshold",
                          "discrete eigenvalue within eps_gap of the continuum edge");

    SpectralData sd;
    sd.grid = g;
    sd.eigenvalues.resize(nb);
    if (nb == 0) return sd;

    double lo = w.minCoeff() - 1.0;
    for (int j = 0; j < nb; ++j) {
        // j-th eigenvalue = sup of x with at most j below
        double a = lo, b = -eps_gap;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (a + b);
            if (spectral::sturm_count_below(fd_diag, fd_off, mid) <= j)
                a = mid;
            else
                b = mid;
        }
        const double e_fd = 0.5 * (a + b);

        // polish against the spectral-collocation H: Rayleigh iteration with a
        // free-resolvent preconditioner (sigma < 0 keeps it uniformly regular)
        VectorXcd v = fd_inverse_iterate(fd_diag, fd_off, e_fd).cast<complexd>();
        double sigma = e_fd;
        double resid = 1.0;
        for (int it = 0; it < 12 && resid > 1e-11; ++it) {
            const double sh = sigma;
            auto op = [&](const VectorXcd& u) {
                return (apply_h_spectral(*g, w, u) - sh * u).eval();
            };
            auto pre = [&](const VectorXcd& u) {
                VectorXcd c = to_freq(*g, u);
                for (Eigen::Index m = 0; m < c.size(); ++m) c[m] /= (g->xi2(m) - sh);
                return from_freq(*g, c);
            };
            VectorXcd sol = VectorXcd::Zero(M);
            spectral::gmres(op, v, sol, pre, 1e-13, 60, 3);
            const double nrm = sol.norm();
            if (!(nrm > 0) || !std::isfinite(nrm)) break;
            v = sol / nrm;
            const VectorXcd hv = apply_h_spectral(*g, w, v);
            sigma = v.dot(hv).real();
            resid = (hv - sigma * v).norm();
        }
        // rotate the residual phase away; symmetric H admits a real eigenvector
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        const complexd ph = v[imax] / std::abs(v[imax]);
        v *= std::conj(ph);

        sd.eigenvalues[j] = sigma;
        sd.eigenvectors.push_back(make_wave(g, v));
    }

    // orthonormalize in the grid inner product, then certify each pair
    for (size_t j = 0; j < sd.eigenvectors.size(); ++j) {
        WaveFunction& phi = sd.eigenvectors[j];
        for (size_t i = 0; i < j; ++i)
            phi.amp -= sd.eigenvectors[i].inner(phi) * sd.eigenvectors[i].amp;
        phi.amp /= phi.norm();
    }
    for (size_t j = 0; j < sd.eigenvectors.size(); ++j) {
        const WaveFunction& phi = sd.eigenvectors[j];
        const VectorXcd hv = apply_h_spectral(*g, w, phi.amp);
        const double e = sd.eigenvalues[j];
        const double rel = (hv - e * phi.amp).norm() / phi.amp.norm();
        if (!(rel <= 1e-8)) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "eigenpair %zu did not converge: residual %.3e at E = %.6g", j, rel,
                          e);
            throw DomainError("solver", buf);
        }
        if (e > -eps_gap && e < 0.0)
            throw DomainError("near-threshold",
                              "polished eigenvalue within eps_gap of the continuum edge");
    }
    return sd;
}

WaveFunction project_continuum(const SpectralData& sd, const WaveFunction& psi) {
    WaveFunction out = psi;
    for (const WaveFunction& phi : sd.eigenvectors) out.amp -= phi.inner(psi) * phi.amp;
    return out;
}

CookResult cook_wave_operator(const QuasiPeriodicPotential& V, const WaveFunction& f, double T,
                              int direction, const CookConfig& cfg) {
    if (!(T > 0)) throw ConfigError("cook horizon must be positive", "cook.T");
    if (direction != 1 && direction != -1)
        throw ConfigError("direction must be +1 or -1", "cook.direction");
    const GridPtr& g = f.grid;
    const double s = double(direction);

    // measure the [T, 2T] tail before paying for the sweep
    double tail = 0.0;
    {
        const long m = std::max(2L, std::lround(T / cfg.tail_step));
        const double d = T / double(m);
        for (long j = 0; j <= m; ++j) {
            const double u = T + d * double(j);
            const VectorXd vu = potential_at(V, s * u);
            const WaveFunction fu = free_evolve(f, s * u);
            const WaveFunction vf =
                make_wave(g, (vu.array().cast<complexd>() * fu.amp.array()).matrix());
            tail += ((j == 0 || j == m) ? 0.5 : 1.0) * d * vf.norm();
        }
    }
    if (tail > cfg.tail_tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "cook tail %.3e above tolerance %.3e at T = %.6g", tail,
                      cfg.tail_tol, T);
        throw DomainError("horizon-too-short", buf);
    }

    // co-evolve the Duhamel sum: one Strang step of the interacting propagator
    // per quadrature node, then a single fine backward sweep to u = 0
    const long nst = std::max(1L, std::lround(T / cfg.du));
    const double du = T / double(nst);
    WaveFunction G = make_wave(g, VectorXcd::Zero(g->points()));
    PropagatorConfig coarse;
    coarse.dt = du;
    for (long i = 0; i < nst; ++i) {
        const double u0 = du * double(i), u1 = du * double(i + 1);
        G = evolve(G, s * u0, s * u1, V, coarse);
        const double wq = (i + 1 < nst) ? du : du / 2;
        const VectorXd vu = potential_at(V, s * u1);
        const WaveFunction fu = free_evolve(f, s * u1);
        G.amp.array() += wq * vu.array().cast<complexd>() * fu.amp.array();
    }
    PropagatorConfig fine;
    fine.dt = cfg.dt;
    const WaveFunction back = evolve(G, s * T, 0.0, V, fine);
    return {make_wave(g, f.amp + complexd(0.0, s) * back.amp), tail};
}

WaveFunction adjoint_wave_operator(const QuasiPeriodicPotential& V, const SpectralData& sd,
                                   const WaveFunction& psi, double T, int direction,
                                   const PropagatorConfig& cfg) {
    if (!V.components.empty())
        throw ConfigError("adjoint wave operator needs a static potential",
                          "potential.components");
    if (!(T > 0)) throw ConfigError("horizon must be positive", "adjoint.T");
    if (direction != 1 && direction != -1)
        throw ConfigError("direction must be +1 or -1", "adjoint.direction");
    const double s = double(direction);
    const WaveFunction pc = project_continuum(sd, psi);
    const WaveFunction ev = evolve(pc, 0.0, s * T, V, cfg);
    return free_evolve(ev, -s * T);
}

WaveFunction free_resolvent(const WaveFunction& psi) {
    const Grid& g = *psi.grid;
    VectorXcd c = to_freq(g, psi.amp);
    if (g.mode == GridMode::cartesian) {
        const double total = c.squaredNorm();
        if (total > 0 && std::norm(c[0]) > 1e-8 * total)
            throw DomainError("zero-mode",
                              "cartesian input carries zero-frequency mass; 1/H0 undefined");
        c[0] = 0.0;
        for (Eigen::Index m = 1; m < c.size(); ++m) c[m] /= g.xi2(m);
    } else {
        for (Eigen::Index m = 0; m < c.size(); ++m) c[m] /= g.xi2(m);
    }
    return make_wave(psi.grid, from_freq(g, c));
}

double representation_residual(const QuasiPeriodicPotential& V, const WaveFunction& gin,
                               double T) {
    check_static_radial_swave(V, "representation_residual");
    if (!(T > 0)) throw ConfigError("horizon must be positive", "representation.T");
    const GridPtr& g = gin.grid;
    const Eigen::Index M = g->points();
    const VectorXd V0 = V.V0.size() ? V.V0 : VectorXd::Zero(M);
    if (V0.cwiseAbs().maxCoeff() == 0.0) return 0.0;  // both sides reduce to g

    DenseScatter ds = dense_setup(V);

    // the formula factors through P_c, so both sides see the continuum part
    VectorXcd gp = gin.amp;
    for (const VectorXd& p : ds.bound) {
        const complexd coef(p.dot(gp.real()), p.dot(gp.imag()));
        gp -= coef * p.cast<complexd>();
    }
    const double gn = gp.norm();
    if (gn < 1e-12 * std::max(gin.amp.norm(), 1e-300)) return 0.0;  // annihilated

    // lhs = e^{iTH0} e^{-iTH} g'
    VectorXcd lhs = spectral::eig_propagate(*ds.full, gp, T);
    lhs = to_freq(*g, lhs);
    for (Eigen::Index m = 0; m < M; ++m) lhs[m] *= std::polar(1.0, T * ds.k2[m]);
    lhs = from_freq(*g, lhs);

    // Bg' = (1 + V/H0)^{-1} g' by direct solve, h = (1/H0) Bg'
    MatrixXd R0 = ds.S;
    for (Eigen::Index j = 0; j < M; ++j) R0.col(j) /= ds.k2[j];
    R0 = (R0 * ds.S).eval();
    MatrixXd A = V0.asDiagonal() * R0;
    A += MatrixXd::Identity(M, M);
    Eigen::PartialPivLU<MatrixXd> lu(A);
    VectorXcd Bg(M);
    {
        const VectorXd br = lu.solve(gp.real().eval());
        const VectorXd bi = lu.solve(gp.imag().eval());
        Bg.real() = br;
        Bg.imag() = bi;
    }
    VectorXcd hk = to_freq(*g, Bg);
    for (Eigen::Index m = 0; m < M; ++m) hk[m] /= ds.k2[m];  // sine coefficients of h

    // time integral in closed form between sine modes
    MatrixXd WR(M, M), WI(M, M), QR(M, M), QI(M, M);
    wstar_dense(ds, T, +1, WR, WI);
    q_kernel(ds, WR, WI, QR, QI);
    VectorXcd acc(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        complexd a(0.0, 0.0);
        for (Eigen::Index j = 0; j < M; ++j)
            a += complexd(QR(i, j), QI(i, j)) * em_entry(ds.k2[i] - ds.k2[j], T, +1) * hk[j];
        acc[i] = ds.k2[i] * a;
    }
    const VectorXcd rhs = Bg - complexd(0.0, 1.0) * from_freq(*g, acc);
    return (lhs - rhs).norm() / gn;
}

Eigen::MatrixXd harmonic_reference_basis(const GridPtr& g, int m, double kappa) {
    if (g->mode != GridMode::radial)
        throw ConfigError("harmonic reference basis is radial", "grid.mode");
    if (m < 1 || Eigen::Index(m) > g->points())
        throw ConfigError("basis size must fit the grid", "cmatrix.m");
    const Eigen::Index M = g->points();
    VectorXd trap(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        const double r = g->axis[i];
        trap[i] = (kappa * r) * (kappa * r);
    }
    char tag[48];
    std::snprintf(tag, sizeof tag, "harm%.8g", kappa);
    const spectral::EigenBasisPtr b = spectral::full_radial_basis(g, trap, tag);
    return b->evecs.leftCols(m);
}

OperatorMatrix assemble_C(const QuasiPeriodicPotential& V, int m, double T) {
    check_static_radial_swave(V, "assemble_C");
    if (!(T > 0)) throw ConfigError("horizon must be positive", "cmatrix.T");
    const GridPtr& g = V.grid;
    const double kappa = 3.2 / double(m);
    const MatrixXd phi = harmonic_reference_basis(g, m, kappa);

    OperatorMatrix out;
    out.grid = g;
    out.basis = phi / std::sqrt(g->quad_weight());
    out.label = "C";
    if (!V.V0.size() || V.V0.cwiseAbs().maxCoeff() == 0.0) {
        out.entries = MatrixXcd::Zero(m, m);
        return out;
    }
    const auto C = c_grid_matrix(V, T);
    MatrixXd CR = C->real() * phi;
    MatrixXd CI = C->imag() * phi;
    MatrixXcd proj(m, m);
    proj.real() = phi.transpose() * CR;
    proj.imag() = phi.transpose() * CI;
    out.entries = proj;
    return out;
}

CSplit split_C(const OperatorMatrix& C, double threshold) {
    if (!(threshold > 0) || threshold >= 1)
        throw ConfigError("split threshold must lie in (0, 1)", "cmatrix.threshold");
    const Eigen::Index m = C.entries.rows();
    Eigen::JacobiSVD<MatrixXcd> svd(C.entries, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < m && sv[rank] >= threshold) ++rank;
    if (rank == m)
        throw DomainError("rank-deficiency",
                          "no truncation rank below the basis size reaches the threshold");
    CSplit out;
    out.singular_values = sv;
    out.rank = int(rank);
    out.C_m = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal() *
              svd.matrixV().leftCols(rank).adjoint();
    out.C_r = C.entries - out.C_m;
    return out;
}

WeightedResolventReport weighted_resolvent_check(const OperatorMatrix& C, const CSplit& split,
                                                 double eta, double sigma, double r_win) {
    if (!(eta > 1.0)) throw ConfigError("eta must exceed 1", "weighted.eta");
    if (!(sigma > 1.0 && sigma <= 1.01))
        throw ConfigError("sigma must lie in (1, 101/100]", "weighted.sigma");
    const Grid& g = *C.grid;
    const Eigen::Index M = C.basis.rows();
    const Eigen::Index m = C.basis.cols();
    VectorXd wminus(M), wplus(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        const double r2 = g.r2(i);
        const bool in = std::sqrt(r2) <= r_win;
        wminus[i] = in ? std::pow(1.0 + r2, -eta / 2) : 0.0;
        wplus[i] = in ? std::pow(1.0 + r2, sigma / 2) : 0.0;
    }
    const double h = g.quad_weight();
    const MatrixXd Wm = h * C.basis.transpose() * wminus.asDiagonal() * C.basis;
    const MatrixXd Wp = h * C.basis.transpose() * wplus.asDiagonal() * C.basis;

    const MatrixXcd A = MatrixXcd::Identity(m, m) - split.C_r;
    Eigen::PartialPivLU<MatrixXcd> lu(A);
    const MatrixXcd minv_cr = lu.solve(split.C_r);
    const MatrixXcd weighted = Wm * minv_cr * Wp;
    Eigen::JacobiSVD<MatrixXcd> svd(weighted);

    const MatrixXcd direct = lu.solve(MatrixXcd::Identity(m, m));
    const MatrixXcd neumann = MatrixXcd::Identity(m, m) + minv_cr;
    WeightedResolventReport rep;
    rep.value = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    rep.neumann_dev = (direct - neumann).norm() / direct.norm();
    return rep;
}

void write_opmx(const std::string& path, const OperatorMatrix& M) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DomainError("io", "cannot open " + tmp + " for writing");
        os.write("OPMX1", 5);
        write_u32(os, uint32_t(M.label.size()));
        os.write(M.label.data(), std::streamsize(M.label.size()));
        write_u32(os, uint32_t(M.basis.rows()));
        write_u32(os, uint32_t(M.basis.cols()));
        for (Eigen::Index i = 0; i < M.basis.rows(); ++i)
            for (Eigen::Index j = 0; j < M.basis.cols(); ++j) {
                const float pair[2] = {float(M.basis(i, j)), 0.0f};
                os.write(reinterpret_cast<const char*>(pair), 8);
            }
        write_u32(os, uint32_t(M.entries.rows()));
        write_u32(os, uint32_t(M.entries.cols()));
        for (Eigen::Index i = 0; i < M.entries.rows(); ++i)
            for (Eigen::Index j = 0; j < M.entries.cols(); ++j) {
                const float pair[2] = {float(M.entries(i, j).real()),
                                       float(M.entries(i, j).imag())};
                os.write(reinterpret_cast<const char*>(pair), 8);
            }
        if (!os) throw DomainError("io", "short write on " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

OperatorMatrix read_opmx(const std::string& path, GridPtr g) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("io", "cannot open " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "OPMX1", 5) != 0)
        throw DomainError("io", path + " is not an OPMX1 container");
    OperatorMatrix M;
    M.grid = std::move(g);
    const uint32_t lab = read_u32(is);
    M.label.resize(lab);
    is.read(M.label.data(), lab);
    const uint32_t br = read_u32(is), bc = read_u32(is);
    M.basis.resize(br, bc);
    for (uint32_t i = 0; i < br; ++i)
        for (uint32_t j = 0; j < bc; ++j) {
            float pair[2];
            is.read(reinterpret_cast<char*>(pair), 8);
            M.basis(i, j) = pair[0];
        }
    const uint32_t er = read_u32(is), ec = read_u32(is);
    M.entries.resize(er, ec);
    for (uint32_t i = 0; i < er; ++i)
        for (uint32_t j = 0; j < ec; ++j) {
            float pair[2];
            is.read(reinterpret_cast<char*>(pair), 8);
            M.entries(i, j) = complexd(pair[0], pair[1]);
        }
    if (!is) throw DomainError("io", "truncated OPMX1 container " + path);
    return M;
}

}  // namespace dlab

#include "dlab/spectral.h"

#include <lapacke.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>

#include "dlab/errors.h"
#include "dlab/fft.h"

namespace dlab::spectral {
namespace {

std::mutex cache_mutex;
std::map<std::string, EigenBasisPtr> basis_cache;

std::string cache_dir() {
    const char* d = std::getenv("DISPERSIVE_LAB_CACHE");
    return d ? std::string(d) : std::string();
}

bool load_basis(const std::string& path, int n, EigenBasis& out) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return false;
    std::uint64_t hdr = 0;
    bool ok = std::fread(&hdr, sizeof hdr, 1, f) == 1 && hdr == std::uint64_t(n);
    if (ok) {
        out.evals.resize(n);
        out.evecs.resize(n, n);
        ok = std::fread(out.evals.data(), sizeof(double), n, f) == size_t(n) &&
             std::fread(out.evecs.data(), sizeof(double), size_t(n) * n, f) == size_t(n) * n;
    }
    std::fclose(f);
    return ok;
}

void store_basis(const std::string& path, const EigenBasis& b) {
    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) return;
    const std::uint64_t n = std::uint64_t(b.evals.size());
    std::fwrite(&n, sizeof n, 1, f);
    std::fwrite(b.evals.data(), sizeof(double), n, f);
    std::fwrite(b.evecs.data(), sizeof(double), size_t(n) * n, f);
    std::fclose(f);
    std::rename(tmp.c_str(), path.c_str());
}

EigenBasisPtr cached_eig(const std::string& key, int n,
                         const std::function<MatrixXd()>& build) {
    {
        std::lock_guard<std::mutex> lk(cache_mutex);
        auto it = basis_cache.find(key);
        if (it != basis_cache.end()) return it->second;
    }
    auto basis = std::make_shared<EigenBasis>();
    const std::string dir = cache_dir();
    const std::string path = dir.empty() ? "" : dir + "/" + key + ".eig";
    if (path.empty() || !load_basis(path, n, *basis)) {
        *basis = sym_eig(build());
        if (!path.empty()) store_basis(path, *basis);
    }
    std::lock_guard<std::mutex> lk(cache_mutex);
    auto [it, inserted] = basis_cache.emplace(key, basis);
    return it->second;
}

}  // namespace

MatrixXd radial_h_matrix(const Grid& g, const VectorXd* V) {
    if (g.mode != GridMode::radial)
        throw DomainError("grid-mode", "radial Hamiltonian requested on a cartesian grid");
    const int m = g.N - 1;
    MatrixXd S(m, m);
    VectorXd e = VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
        e[j] = 1.0;
        S.col(j) = fft::dst1(e);
        e[j] = 0.0;
    }
    VectorXd k2(m);
    for (int j = 0; j < m; ++j) {
        const double k = (j + 1) * 3.14159265358979323846 / g.L;
        k2[j] = k * k;
    }
    MatrixXd H = S * k2.asDiagonal() * S.transpose();
    for (int j = 0; j < m; ++j) {
        const double r = (j + 1) * g.h;
        H(j, j) += g.angular_term / (r * r) + (V ? (*V)[j] : 0.0);
    }
    return H;
}

EigenBasis sym_eig(const MatrixXd& H) {
    EigenBasis b;
    const int n = int(H.rows());
    b.evecs = H;
    b.evals.resize(n);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                    b.evecs.data(), n, b.evals.data());
    if (info != 0)
        throw DomainError("eig-failure", "dsyevd failed with info " + std::to_string(info));
    return b;
}

EigenBasisPtr free_radial_basis(const GridPtr& g) {
    char key[96];
    std::snprintf(key, sizeof key, "hfree_n%d_L%g_N%d", g->n, g->L, g->N);
    return cached_eig(key, g->N - 1, [&] { return radial_h_matrix(*g, nullptr); });
}

EigenBasisPtr full_radial_basis(const GridPtr& g, const VectorXd& V, const std::string& tag) {
    char key[128];
    std::snprintf(key, sizeof key, "hfull_n%d_L%g_N%d_%s", g->n, g->L, g->N, tag.c_str());
    return cached_eig(key, g->N - 1, [&] { return radial_h_matrix(*g, &V); });
}

VectorXcd eig_propagate(const EigenBasis& b, const VectorXcd& u, double t) {
    // split into two real products so the basis matrix is never copied to complex
    VectorXd cr = b.evecs.transpose() * u.real();
    VectorXd ci = b.evecs.transpose() * u.imag();
    for (Eigen::Index j = 0; j < cr.size(); ++j) {
        const complexd v = complexd(cr[j], ci[j]) * std::polar(1.0, -t * b.evals[j]);
        cr[j] = v.real();
        ci[j] = v.imag();
    }
    VectorXcd out(cr.size());
    out.real() = b.evecs * cr;
    out.imag() = b.evecs * ci;
    return out;
}

int sturm_count_below(const VectorXd& diag, const VectorXd& off, double x) {
    const int n = int(diag.size());
    int count = 0;
    double d = 1.0;
    for (int i = 0; i < n; ++i) {
        const double b2 = i > 0 ? off[i - 1] * off[i - 1] : 0.0;
        d = diag[i] - x - (i > 0 ? b2 / d : 0.0);
        if (d == 0.0) d = -1e-30;
        if (d < 0.0) ++count;
    }
    return count;
}

double gmres(const std::function<VectorXcd(const VectorXcd&)>& apply,
             const VectorXcd& rhs, VectorXcd& x,
             const std::function<VectorXcd(const VectorXcd&)>& precond,
             double tol, int restart, int max_outer) {
    using std::complex;
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        x.setZero(rhs.size());
        return 0.0;
    }
    if (x.size() != rhs.size()) x = VectorXcd::Zero(rhs.size());
    double resid = 1.0;
    for (int outer = 0; outer < max_outer; ++outer) {
        VectorXcd r = rhs - apply(x);
        if (precond) r = precond(r);
        const double beta = r.norm();
        const double ref = precond ? precond(rhs).norm() : bnorm;
        resid = beta / ref;
        if (resid < tol) return resid;

        std::vector<VectorXcd> V;
        V.push_back(r / beta);
        Eigen::MatrixXcd Hh = Eigen::MatrixXcd::Zero(restart + 1, restart);
        VectorXcd gvec = VectorXcd::Zero(restart + 1);
        gvec[0] = beta;
        std::vector<complex<double>> cs(restart), sn(restart);
        int k = 0;
        for (; k < restart; ++k) {
            VectorXcd w = apply(V[k]);
            if (precond) w = precond(w);
            for (int i = 0; i <= k; ++i) {
                Hh(i, k) = V[i].dot(w);
                w -= Hh(i, k) * V[i];
            }
            const double hsub = w.norm();
            Hh(k + 1, k) = hsub;
            // givens rotations
            for (int i = 0; i < k; ++i) {
                const complex<double> t0 = cs[i] * Hh(i, k) + sn[i] * Hh(i + 1, k);
                Hh(i + 1, k) = -std::conj(sn[i]) * Hh(i, k) + std::conj(cs[i]) * Hh(i + 1, k);
                Hh(i, k) = t0;
            }
            const double denom = std::sqrt(std::norm(Hh(k, k)) + std::norm(Hh(k + 1, k)));
            if (denom < 1e-300) {
                ++k;
                break;
            }
            cs[k] = std::conj(Hh(k, k)) / denom;
            sn[k] = std::conj(Hh(k + 1, k)) / denom;
            Hh(k, k) = cs[k] * Hh(k, k) + sn[k] * Hh(k + 1, k);
            Hh(k + 1, k) = 0.0;
            gvec[k + 1] = -std::conj(sn[k]) * gvec[k];
            gvec[k] = cs[k] * gvec[k];
            resid = std::abs(gvec[k + 1]) / ref;
            if (resid < tol || hsub < 1e-300) {
                ++k;
                break;
            }
            V.push_back(w / hsub);
        }
        // back-substitute the k x k triangular system
        VectorXcd y = VectorXcd::Zero(k);
        for (int i = k - 1; i >= 0; --i) {
            complex<double> s = gvec[i];
            for (int j = i + 1; j < k; ++j) s -= Hh(i, j) * y[j];
            y[i] = s / Hh(i, i);
        }
        for (int i = 0; i < k && i < int(V.size()); ++i) x += y[i] * V[i];
        if (resid < tol) return resid;
    }
    return resid;
}

}  // namespace dlab::spectral

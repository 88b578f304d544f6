#include "dlab/grid.h"

#include <cmath>
#include "dlab/fft.h"

namespace dlab {

Eigen::Index Grid::ipow(int b, int e) {
    Eigen::Index r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

double Grid::quad_weight() const {
    if (mode == GridMode::radial) return h;
    double w = 1;
    for (int i = 0; i < n; ++i) w *= h;
    return w;
}

double Grid::r2(Eigen::Index flat) const {
    if (mode == GridMode::radial) {
        double r = axis[flat];
        return r * r;
    }
    double s = 0;
    for (int d = 0; d < n; ++d) {
        double c = axis[flat % N];
        s += c * c;
        flat /= N;
    }
    return s;
}

double Grid::xi2(Eigen::Index flat) const {
    if (mode == GridMode::radial) {
        double k = freq[flat];
        return k * k;
    }
    double s = 0;
    for (int d = 0; d < n; ++d) {
        double c = freq[flat % N];
        s += c * c;
        flat /= N;
    }
    return s;
}

GridPtr make_grid(GridMode mode, int n, double L, int N) {
    if (L <= 0) throw ConfigError("box half-length must be positive", "grid.L");
    if (N < 16 || (N & (N - 1)) != 0)
        throw ConfigError("points_per_axis must be a power of two >= 16", "grid.N");
    if (n < 1) throw ConfigError("dimension must be positive", "grid.n");
    if (mode == GridMode::cartesian && n >= 4)
        throw ConfigError("cartesian grids support n <= 3 only (use radial)", "grid.n");

    auto g = std::make_shared<Grid>();
    g->mode = mode;
    g->n = n;
    g->L = L;
    g->N = N;
    if (mode == GridMode::cartesian) {
        g->h = 2 * L / N;
        g->angular_term = 0;
        g->axis.resize(N);
        g->freq.resize(N);
        for (int j = 0; j < N; ++j) g->axis[j] = -L + j * g->h;
        double dxi = M_PI / L; // 2 pi / (N h)
        for (int k = 0; k < N; ++k) g->freq[k] = (k < N / 2 ? k : k - N) * dxi;
    } else {
        g->h = L / N;
        g->angular_term = (n - 1) * (n - 3) / 4.0;
        g->axis.resize(N - 1);
        g->freq.resize(N - 1);
        for (int j = 1; j < N; ++j) g->axis[j - 1] = j * g->h;
        for (int m = 1; m < N; ++m) g->freq[m - 1] = m * M_PI / L;
    }
    return g;
}

double WaveFunction::norm() const {
    return std::sqrt(grid->quad_weight()) * amp.norm();
}

complexd WaveFunction::inner(const WaveFunction& other) const {
    return grid->quad_weight() * amp.dot(other.amp);
}

WaveFunction make_wave(GridPtr g, VectorXcd amp) {
    if (amp.size() != g->points()) throw ConfigError("amplitude size does not match grid");
    return WaveFunction{std::move(g), std::move(amp)};
}

double ramp(double s) {
    if (s <= 0) return 0;
    if (s >= 1) return 1;
    double a = std::exp(-1.0 / s);
    double b = std::exp(-1.0 / (1 - s));
    return a / (a + b);
}

double cutoff_eval(const CutoffProfile& p, double v) {
    double m = p.threshold;
    if (p.kind == CutoffKind::F_geq) return ramp((v - 0.5 * m) / (1.5 * m));
    return ramp((2.0 * m - v) / (1.5 * m)); // F_leq / F_c
}

WaveFunction weight_apply(const WaveFunction& psi, double sigma) {
    WaveFunction out = psi;
    const Grid& g = *psi.grid;
    for (Eigen::Index i = 0; i < g.points(); ++i)
        out.amp[i] *= std::pow(1.0 + g.r2(i), 0.5 * sigma);
    return out;
}

VectorXcd to_freq(const Grid& g, const VectorXcd& space) {
    if (g.mode == GridMode::radial) return fft::dst1(space);
    VectorXcd f = fft::forward_nd(space, g.n, g.N);
    return f / std::sqrt(double(g.points()));
}

VectorXcd from_freq(const Grid& g, const VectorXcd& freq) {
    if (g.mode == GridMode::radial) return fft::dst1(freq);
    VectorXcd s = fft::backward_nd(freq, g.n, g.N);
    return s / std::sqrt(double(g.points()));
}

bool cutoff_resolved(const Grid& g, const CutoffProfile& p, Domain d) {
    double res = (d == Domain::space)
                     ? g.h
                     : (g.mode == GridMode::cartesian ? 2 * M_PI / (g.N * g.h) : M_PI / g.L);
    return p.threshold >= 2 * res;
}

WaveFunction cutoff_apply(const WaveFunction& psi, const CutoffProfile& p, Domain d) {
    const Grid& g = *psi.grid;
    WaveFunction out = psi;
    if (d == Domain::space) {
        for (Eigen::Index i = 0; i < g.points(); ++i)
            out.amp[i] *= cutoff_eval(p, std::sqrt(g.r2(i)));
    } else {
        VectorXcd f = to_freq(g, psi.amp);
        for (Eigen::Index i = 0; i < f.size(); ++i)
            f[i] *= cutoff_eval(p, std::sqrt(g.xi2(i)));
        out.amp = from_freq(g, f);
    }
    return out;
}

} // namespace dlab

#include "dlab/microlocal.h"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "dlab/dynamics.h"
#include "dlab/fft.h"

namespace dlab {
namespace {

inline complexd cis(long double phi) {
    constexpr long double twopi = 6.283185307179586476925286766559L;
    phi = std::fmod(phi, twopi);
    return {double(std::cos(phi)), double(std::sin(phi))};
}

// per-(grid shape, tau) tables: chirp plans plus output phases with the
// out-of-box zero mask folded in
struct DilatePlans {
    std::unique_ptr<fft::CztPlan> cart;
    VectorXcd cart_phase; // e^{-i pi (J0 + e^tau j)} / N, zeroed where |y_j| >= L
    std::unique_ptr<fft::CztPlan> rad_p, rad_m;
    VectorXcd rad_ph_p, rad_ph_m; // e^{+-i beta (j+1)} * sqrt(2/N), zero masked
};

std::mutex plan_mutex;
std::map<std::tuple<int, double, int, double>, std::shared_ptr<DilatePlans>> plan_cache;

std::shared_ptr<DilatePlans> dilate_plans(const Grid& g, double tau) {
    const auto key = std::make_tuple(int(g.mode), g.L, g.N, tau);
    {
        std::lock_guard<std::mutex> lk(plan_mutex);
        auto it = plan_cache.find(key);
        if (it != plan_cache.end()) return it->second;
    }
    auto plans = std::make_shared<DilatePlans>();
    const double scale = std::exp(tau);
    if (g.mode == GridMode::cartesian) {
        const int N = g.N;
        const double J0 = g.L * (1.0 - scale) / g.h;
        plans->cart = std::make_unique<fft::CztPlan>(N, N, 2.0 * M_PI * scale / N,
                                                     -2.0 * M_PI * J0 / N);
        plans->cart_phase.resize(N);
        for (int j = 0; j < N; ++j) {
            const double y = scale * g.axis[j];
            plans->cart_phase[j] = std::abs(y) >= g.L
                                       ? complexd(0, 0)
                                       : cis(-M_PIl * (J0 + (long double)scale * j)) / double(N);
        }
    } else {
        const int m = g.N - 1;
        const double beta = M_PI * scale / g.N;
        plans->rad_p = std::make_unique<fft::CztPlan>(m, m, beta, -beta);
        plans->rad_m = std::make_unique<fft::CztPlan>(m, m, -beta, beta);
        plans->rad_ph_p.resize(m);
        plans->rad_ph_m.resize(m);
        const double amp = std::sqrt(2.0 / g.N);
        for (int j = 0; j < m; ++j) {
            const double r = scale * (j + 1) * g.h;
            if (r >= g.L) {
                plans->rad_ph_p[j] = plans->rad_ph_m[j] = complexd(0, 0);
            } else {
                plans->rad_ph_p[j] = amp * cis(beta * (long double)(j + 1));
                plans->rad_ph_m[j] = amp * cis(-beta * (long double)(j + 1));
            }
        }
    }
    std::lock_guard<std::mutex> lk(plan_mutex);
    return plan_cache.emplace(key, std::move(plans)).first->second;
}

// squared-norm fraction of psi at |x| >= c
double tail_fraction(const Grid& g, const VectorXcd& amp, double c) {
    const double c2 = c * c;
    double tail = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
        const double m = std::norm(amp[i]);
        total += m;
        if (g.r2(i) >= c2) tail += m;
    }
    return total > 0.0 ? tail / total : 0.0;
}

VectorXcd dilate_amp(const Grid& g, const VectorXcd& amp, double tau) {
    if (tau == 0.0) return amp;
    auto plans = dilate_plans(g, tau);
    if (g.mode == GridMode::cartesian) {
        const int N = g.N;
        const Eigen::Index lines = g.points() / N;
        VectorXcd cur = amp;
        const double pref = std::exp(tau / 2.0); // per axis
        for (int axis = 0; axis < g.n; ++axis) {
            // stride of consecutive samples along this axis (row-major cube)
            const Eigen::Index stride = Grid::ipow(N, g.n - 1 - axis);
            VectorXcd next(cur.size());
            VectorXcd line(N), shifted(N);
            for (Eigen::Index l = 0; l < lines; ++l) {
                const Eigen::Index block = l / stride, off = l % stride;
                const Eigen::Index base = block * stride * N + off;
                for (int j = 0; j < N; ++j) line[j] = cur[base + j * stride];
                VectorXcd c = fft::forward(line);
                for (int j = 0; j < N; ++j) shifted[j] = c[(j + N / 2) % N];
                VectorXcd s = plans->cart->run(shifted);
                for (int j = 0; j < N; ++j)
                    next[base + j * stride] = pref * s[j] * plans->cart_phase[j];
            }
            cur.swap(next);
        }
        return cur;
    }
    VectorXcd c = fft::dst1(amp);
    VectorXcd tp = plans->rad_p->run(c);
    VectorXcd tm = plans->rad_m->run(c);
    const double pref = std::exp(tau / 2.0);
    const complexd half_over_i(0.0, -0.5); // 1/(2i)
    VectorXcd out(amp.size());
    for (Eigen::Index j = 0; j < out.size(); ++j)
        out[j] = pref * half_over_i *
                 (plans->rad_ph_p[j] * tp[j] - plans->rad_ph_m[j] * tm[j]);
    return out;
}

} // namespace

WaveFunction dilate(const WaveFunction& psi, double tau) {
    const Grid& g = *psi.grid;
    if (tau > 0.0 && tail_fraction(g, psi.amp, std::exp(-tau) * g.L) > 1e-6)
        throw DomainError("domain-overflow",
                          "dilation maps a non-negligible part of the state outside the box");
    return make_wave(psi.grid, dilate_amp(g, psi.amp, tau));
}

WaveFunction apply_projector(const OutgoingProjector& p, const WaveFunction& psi, int sign) {
    if (p.R < 1.0) throw ConfigError("projector scale R must be >= 1", "projector.R");
    if (p.W < 20.0) throw ConfigError("quadrature halfwidth must be >= 20", "projector.W");
    if (p.hw <= 0.0 || p.hw > 0.1)
        throw ConfigError("quadrature step must lie in (0, 0.1]", "projector.hw");

    const Grid& g = *psi.grid;
    const int K = int(std::lround(p.W / p.hw));

    // weighted leakage through the box edge across the positive-tau nodes;
    // csch weights make distant nodes harmless, so only a state parked next
    // to the edge can trip this
    double leak = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double w = (k - 0.5) * p.hw;
        const double wt = p.hw / std::sinh(M_PI * w / 2.0);
        if (wt < 1e-15) break;
        leak += wt * std::sqrt(tail_fraction(g, psi.amp, std::exp(-w / p.R) * g.L));
    }
    if (leak > 1e-3)
        throw DomainError("domain-overflow",
                          "projector quadrature pushes weighted mass outside the box");

    VectorXcd acc = VectorXcd::Zero(psi.amp.size());
    const complexd quarter_over_i(0.0, -0.25); // (1/2) * 1/(2i)
    for (int k = 1; k <= K; ++k) {
        const double w = (k - 0.5) * p.hw;
        const double wt = p.hw / std::sinh(M_PI * w / 2.0);
        if (wt < 1e-15) break;
        const complexd ph = cis(-(long double)(w * p.M / p.R));
        VectorXcd up = dilate_amp(g, psi.amp, w / p.R);
        VectorXcd um = dilate_amp(g, psi.amp, -w / p.R);
        acc += (wt * quarter_over_i) * (ph * up - std::conj(ph) * um);
    }
    VectorXcd plus = 0.5 * psi.amp + acc;
    WaveFunction out = make_wave(psi.grid, std::move(plus));
    if (out.norm() > (1.0 + 1e-6) * psi.norm())
        throw DomainError("numerical-integrity", "projector output exceeds the input norm");
    if (sign < 0) out.amp = psi.amp - out.amp;
    return out;
}

double tanh_kernel_residual(const OutgoingProjector& p, double a) {
    const int K = int(std::lround(p.W / p.hw));
    double q = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double w = (k - 0.5) * p.hw;
        q += p.hw / std::sinh(M_PI * w / 2.0) * std::sin(a * w);
    }
    return q - std::tanh(a);
}

WaveFunction phase_space_cutoff(const WaveFunction& psi, double t, double alpha,
                                const CutoffProfile& profile) {
    if (t <= 0.0)
        throw DomainError("domain", "phase-space cutoff needs t > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("phase-space exponent must lie in (0, 1)", "phase_space.alpha");
    WaveFunction phi = free_evolve(psi, -t);
    const double scale = std::pow(t, alpha);
    const Grid& g = *psi.grid;
    for (Eigen::Index i = 0; i < phi.amp.size(); ++i)
        phi.amp[i] *= cutoff_eval(profile, std::sqrt(g.r2(i)) / scale);
    return free_evolve(phi, t);
}

} // namespace dlab

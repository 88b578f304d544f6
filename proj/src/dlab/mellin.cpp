#include "dlab/mellin.h"

#include <cmath>
#include <functional>

#include "dlab/fft.h"

namespace dlab {
namespace {

constexpr int kOversample = 4;
constexpr int kHalfTaps = 10;        // stencil half-width on the fine grid
constexpr double kKaiserBeta = 14.0;

double kaiser_sinc(double x) {
    const double u = x / kHalfTaps;
    if (std::abs(u) >= 1.0) return 0.0;
    const double s = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    return s * std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) /
           std::cyl_bessel_i(0.0, kKaiserBeta);
}

} // namespace

VectorXcd MellinProjector::sector_pipeline(const VectorXcd& w) const {
    VectorXcd what = fft::forward(w);
    const int J = J_;
    VectorXcd pad = VectorXcd::Zero(kOversample * J);
    for (int m = 0; m < J; ++m) {
        const complexd y = what[m] * mult_[m];
        pad[m < J / 2 ? m : (kOversample - 1) * J + m] = y;
    }
    return fft::backward(pad) / double(J);
}

MellinProjector::MellinProjector(GridPtr g, double M, double R, int J)
    : grid_(std::move(g)), M_(M), R_(R), J_(J) {
    const Grid& gr = *grid_;
    if (gr.mode == GridMode::cartesian && gr.n != 1)
        throw ConfigError("sector Mellin projector supports 1D and radial grids", "projector.grid");
    if (J < 256 || (J & (J - 1)) != 0)
        throw ConfigError("log-grid size must be a power of two >= 256", "projector.J");
    if (R <= 0.0) throw ConfigError("projector scale R must be positive", "projector.R");

    const bool radial = gr.mode == GridMode::radial;
    const double h = gr.h;
    const double rmin = h / 4.0;
    lmin_ = std::log(rmin);
    dl_ = (std::log(gr.L) - lmin_) / J;

    half_weight_.resize(J);
    for (int j = 0; j < J; ++j) half_weight_[j] = std::exp(0.5 * (lmin_ + j * dl_));

    mult_.resize(J);
    for (int m = 0; m < J; ++m) {
        const double a = 2.0 * M_PI * (m < J / 2 ? m : m - J) / (J * dl_);
        mult_[m] = 0.5 * (std::tanh((a - M_) / R_) + 1.0);
    }

    const int T = 2 * kHalfTaps;
    const double hf = h / kOversample;

    // fine-grid tap resolver; returns index < 0 for a tap that is identically 0
    auto build = [&](Stencil& st, const std::vector<double>& pos,
                     const std::function<std::pair<int, double>(int)>& resolve) {
        const int n = int(pos.size());
        st.taps = T;
        st.idx.assign(size_t(n) * T, 0);
        st.wts.assign(size_t(n) * T, 0.0);
        for (int t = 0; t < n; ++t) {
            const double p = pos[t];
            const int first = int(std::floor(p)) - kHalfTaps + 1;
            for (int k = 0; k < T; ++k) {
                const int raw = first + k;
                auto [ri, sgn] = resolve(raw);
                if (ri < 0) continue;
                st.idx[size_t(t) * T + k] = ri;
                st.wts[size_t(t) * T + k] = sgn * kaiser_sinc(p - raw);
            }
        }
    };

    if (radial) {
        const int NF = kOversample * gr.N - 1; // fine radii (i+1) * hf, Dirichlet both ends
        auto reflect = [NF](int i) -> std::pair<int, double> {
            double s = 1.0;
            if (i < 0) {
                if (i == -1) return {-1, 0.0};
                i = -2 - i;
                s = -1.0;
            } else if (i >= NF) {
                if (i == NF) return {-1, 0.0};
                i = 2 * NF - i;
                s = -1.0;
            }
            if (i < 0 || i >= NF) return {-1, 0.0};
            return {i, s};
        };
        std::vector<double> pos(J);
        for (int j = 0; j < J; ++j) pos[j] = std::exp(lmin_ + j * dl_) / hf - 1.0;
        build(to_log_, pos, reflect);

        const int JF = kOversample * J;
        auto wrap = [JF](int i) -> std::pair<int, double> {
            return {((i % JF) + JF) % JF, 1.0};
        };
        std::vector<double> rd(gr.N - 1);
        for (int i = 0; i + 1 < gr.N; ++i) rd[i] = (std::log(gr.axis[i]) - lmin_) / (dl_ / kOversample);
        build(from_log_, rd, wrap);
    } else {
        const int NF = kOversample * gr.N;
        auto wrapx = [NF](int i) -> std::pair<int, double> {
            return {((i % NF) + NF) % NF, 1.0};
        };
        std::vector<double> pp(J), pm(J);
        for (int j = 0; j < J; ++j) {
            const double r = std::exp(lmin_ + j * dl_);
            pp[j] = (r + gr.L) / hf;
            pm[j] = (-r + gr.L) / hf;
        }
        build(to_log_, pp, wrapx);
        build(to_log_neg_, pm, wrapx);

        const int JF = kOversample * J;
        auto wrapl = [JF](int i) -> std::pair<int, double> {
            return {((i % JF) + JF) % JF, 1.0};
        };
        std::vector<double> rd(gr.N / 2);
        for (int q = 1; q <= gr.N / 2; ++q) rd[q - 1] = (std::log(q * h) - lmin_) / (dl_ / kOversample);
        build(from_log_, rd, wrapl);
    }
}

namespace {

VectorXcd gather(const VectorXcd& fine, const std::vector<int>& idx,
                 const std::vector<double>& wts, int taps, int rows) {
    VectorXcd out(rows);
    for (int t = 0; t < rows; ++t) {
        complexd acc(0, 0);
        const size_t o = size_t(t) * taps;
        for (int k = 0; k < taps; ++k) acc += wts[o + k] * fine[idx[o + k]];
        out[t] = acc;
    }
    return out;
}

} // namespace

WaveFunction MellinProjector::apply(const WaveFunction& psi) const {
    const Grid& gr = *grid_;
    if (psi.grid.get() != grid_.get() &&
        (psi.grid->mode != gr.mode || psi.grid->N != gr.N || psi.grid->L != gr.L))
        throw ConfigError("wavefunction grid does not match the projector", "projector.grid");

    if (gr.mode == GridMode::radial) {
        VectorXcd c = fft::dst1(psi.amp);
        VectorXcd cpad = VectorXcd::Zero(kOversample * gr.N - 1);
        cpad.head(gr.N - 1) = c;
        VectorXcd u4 = 2.0 * fft::dst1(cpad); // sqrt(oversample) restores values

        VectorXcd w = gather(u4, to_log_.idx, to_log_.wts, to_log_.taps, J_);
        for (int j = 0; j < J_; ++j) w[j] *= half_weight_[j];
        VectorXcd fine2 = sector_pipeline(w);

        VectorXcd out = gather(fine2, from_log_.idx, from_log_.wts, from_log_.taps, gr.N - 1);
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] /= std::sqrt(gr.axis[i]);
        return make_wave(psi.grid, std::move(out));
    }

    const int N = gr.N;
    VectorXcd U = fft::forward(psi.amp);
    VectorXcd pad = VectorXcd::Zero(kOversample * N);
    for (int k = 0; k < N; ++k) {
        if (k < N / 2)
            pad[k] = U[k];
        else if (k == N / 2) { // split the Nyquist bin to keep the interpolant real-symmetric
            pad[N / 2] = 0.5 * U[k];
            pad[(kOversample - 1) * N + N / 2] = 0.5 * U[k];
        } else
            pad[(kOversample - 1) * N + k] = U[k];
    }
    VectorXcd u4 = fft::backward(pad) / double(N);

    VectorXcd wp = gather(u4, to_log_.idx, to_log_.wts, to_log_.taps, J_);
    VectorXcd wm = gather(u4, to_log_neg_.idx, to_log_neg_.wts, to_log_neg_.taps, J_);
    for (int j = 0; j < J_; ++j) {
        wp[j] *= half_weight_[j];
        wm[j] *= half_weight_[j];
    }
    VectorXcd fp = sector_pipeline(wp);
    VectorXcd fm = sector_pipeline(wm);

    VectorXcd outp = gather(fp, from_log_.idx, from_log_.wts, from_log_.taps, N / 2);
    VectorXcd outm = gather(fm, from_log_.idx, from_log_.wts, from_log_.taps, N / 2);
    VectorXcd out(psi.amp.size());
    out[N / 2] = 0.5 * psi.amp[N / 2];
    for (int q = 1; q <= N / 2; ++q) {
        const double rs = std::sqrt(q * gr.h);
        if (q < N / 2) out[N / 2 + q] = outp[q - 1] / rs;
        out[N / 2 - q] = outm[q - 1] / rs;
    }
    return make_wave(psi.grid, std::move(out));
}

} // namespace dlab

#include "dlab/battery.h"

#include <cmath>

#include "dlab/rng.h"

namespace dlab::battery {
namespace {

constexpr double kCarriers[3] = {1.25, 1.45, 1.7};

WaveFunction normalized(GridPtr g, VectorXcd amp) {
    WaveFunction w = make_wave(std::move(g), std::move(amp));
    const double n = w.norm();
    if (n > 0) w.amp /= n;
    return w;
}

std::vector<double> bump_ladder() {
    // geometric ladder of bump centers, 6..180
    std::vector<double> xs(10);
    const double ratio = std::pow(180.0 / 6.0, 1.0 / 9.0);
    for (int i = 0; i < 10; ++i) xs[i] = 6.0 * std::pow(ratio, i);
    return xs;
}

VectorXcd random_spectrum(const Grid& g, Rng& rng, double kmax, double pow_exp) {
    VectorXcd c(g.freq.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double re = rng.normal(), im = rng.normal();
        const double k = std::abs(g.freq[i]);
        c[i] = complexd(re, im) * std::exp(-std::pow(k / kmax, pow_exp));
    }
    return c;
}

} // namespace

std::vector<WaveFunction> decay_battery(const GridPtr& g, int count, std::uint64_t seed) {
    const Grid& gr = *g;
    Rng rng(seed);
    std::vector<WaveFunction> out;
    out.reserve(count);
    const auto xs = bump_ladder();
    const int ncomb = std::min(6, count);
    const bool radial = gr.mode == GridMode::radial;

    for (int i = 0; i < ncomb; ++i) {
        const double carrier = kCarriers[i % 3];
        const double xi0 = radial || i < 3 ? carrier : -carrier;
        const double ph = radial ? rng.uniform(0.0, 2.0 * M_PI) : 0.0;
        VectorXcd u = VectorXcd::Zero(gr.points());
        for (double X : xs) {
            VectorXcd b(u.size());
            double nb = 0.0;
            for (Eigen::Index j = 0; j < u.size(); ++j) {
                const double x = gr.axis[j];
                const double center = radial ? X : (xi0 > 0 ? X : -X);
                const double env = std::exp(-std::pow((x - center) / (X / 5.0), 2));
                b[j] = env * std::polar(1.0, xi0 * x + ph);
                nb += std::norm(b[j]);
            }
            u += b / std::sqrt(nb * gr.quad_weight());
        }
        out.push_back(normalized(g, std::move(u)));
    }

    for (int i = ncomb; i < count; ++i) {
        VectorXcd c = random_spectrum(gr, rng, 1.5, 6.0);
        VectorXcd u = from_freq(gr, c);
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            const double x = gr.axis[j];
            u[j] *= radial ? std::exp(-std::pow((x - 135.0) / 45.0, 2))
                           : std::exp(-std::pow(x / 45.0, 2));
        }
        out.push_back(normalized(g, std::move(u)));
    }
    return out;
}

std::vector<WaveFunction> microlocal_battery(const GridPtr& g, int count, std::uint64_t seed) {
    const Grid& gr = *g;
    Rng rng(seed);
    const CutoffProfile floor{CutoffKind::F_geq, 0.8};
    std::vector<WaveFunction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        VectorXcd c = random_spectrum(gr, rng, 1.5, 6.0);
        for (Eigen::Index m = 0; m < c.size(); ++m)
            c[m] *= cutoff_eval(floor, std::abs(gr.freq[m]));
        VectorXcd u = from_freq(gr, c);
        for (Eigen::Index j = 0; j < u.size(); ++j)
            u[j] *= std::exp(-std::pow((std::abs(gr.axis[j]) - 25.0) / 15.0, 2));
        out.push_back(normalized(g, std::move(u)));
    }
    return out;
}

std::vector<WaveFunction> contraction_battery(const GridPtr& g, int count, std::uint64_t seed) {
    const Grid& gr = *g;
    Rng rng(seed);
    const bool radial = gr.mode == GridMode::radial;
    std::vector<WaveFunction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double kc = rng.uniform(0.6, 2.5);
        const double span = 0.4 * gr.L;
        const double center = radial ? rng.uniform(0.05 * gr.L, span) : rng.uniform(-span, span);
        const double width = rng.uniform(15.0, 40.0);
        VectorXcd c = random_spectrum(gr, rng, kc, 2.0);
        VectorXcd u = from_freq(gr, c);
        for (Eigen::Index j = 0; j < u.size(); ++j)
            u[j] *= std::exp(-std::pow((gr.axis[j] - center) / width, 2));
        out.push_back(normalized(g, std::move(u)));
    }
    return out;
}

double safe_horizon(const Grid& g) {
    return g.mode == GridMode::cartesian ? 25.0 : 41.25;
}

} // namespace dlab::battery

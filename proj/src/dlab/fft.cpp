#include "dlab/fft.h"

#include <fftw3.h>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace dlab::fft {
namespace {

std::mutex plan_mutex;

// key: (kind, rank, size). kind 0 = c2c forward, 1 = c2c backward, 2 = RODFT00
std::map<std::tuple<int, int, int>, fftw_plan> plan_cache;

fftw_plan plan_c2c(int rank, int n, int sign, fftw_complex* in, fftw_complex* out) {
    std::lock_guard<std::mutex> lk(plan_mutex);
    auto key = std::make_tuple(sign == FFTW_FORWARD ? 0 : 1, rank, n);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    std::vector<int> dims(rank, n);
    // planned with FFTW_ESTIMATE | FFTW_UNALIGNED so the plan is reusable on
    // any buffer via fftw_execute_dft
    fftw_plan p = fftw_plan_dft(rank, dims.data(), in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_cache.emplace(key, p);
    return p;
}

fftw_plan plan_dst1(int m, double* in, double* out) {
    std::lock_guard<std::mutex> lk(plan_mutex);
    auto key = std::make_tuple(2, 1, m);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    fftw_plan p = fftw_plan_r2r_1d(m, in, out, FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_cache.emplace(key, p);
    return p;
}

VectorXcd run_c2c(const VectorXcd& in, int rank, int n, int sign) {
    VectorXcd out(in.size());
    auto* pin = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan p = plan_c2c(rank, n, sign, pin, pout);
    fftw_execute_dft(p, pin, pout);
    return out;
}

} // namespace

VectorXcd forward(const VectorXcd& in) { return run_c2c(in, 1, int(in.size()), FFTW_FORWARD); }
VectorXcd backward(const VectorXcd& in) { return run_c2c(in, 1, int(in.size()), FFTW_BACKWARD); }

VectorXcd forward_nd(const VectorXcd& in, int rank, int n_per_axis) {
    return run_c2c(in, rank, n_per_axis, FFTW_FORWARD);
}
VectorXcd backward_nd(const VectorXcd& in, int rank, int n_per_axis) {
    return run_c2c(in, rank, n_per_axis, FFTW_BACKWARD);
}

VectorXd dst1(const VectorXd& in) {
    const int m = int(in.size());
    VectorXd tmp = in, out(m);
    fftw_plan p = plan_dst1(m, tmp.data(), out.data());
    fftw_execute_r2r(p, tmp.data(), out.data());
    // FFTW's RODFT00 is 2 * sum sin(...); rescale to the orthonormal involution
    out *= 0.5 * std::sqrt(4.0 / (m + 1));
    return out;
}

VectorXcd dst1(const VectorXcd& in) {
    VectorXd re = dst1(VectorXd(in.real()));
    VectorXd im = dst1(VectorXd(in.imag()));
    VectorXcd out(in.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

namespace {
// e^{i phi} with phi accumulated in long double and reduced mod 2pi; the
// Bluestein chirps need n^2-scale phases where plain double loses ~1e-9
inline std::complex<double> cis_l(long double phi) {
    constexpr long double twopi = 6.283185307179586476925286766559L;
    phi = std::fmod(phi, twopi);
    return {double(std::cos(phi)), double(std::sin(phi))};
}
} // namespace

CztPlan::CztPlan(int n, int m, double theta_w, double theta_a) : n_(n), m_(m) {
    nfft_ = 1;
    while (nfft_ < n + m - 1) nfft_ <<= 1;
    const long double tw = theta_w, ta = theta_a;

    a_chirp_.resize(n);
    for (int j = 0; j < n; ++j)
        a_chirp_[j] = cis_l(-ta * j + tw * 0.5L * j * (long double)j);
    VectorXcd B = VectorXcd::Zero(nfft_);
    // chirp kernel w^{-j^2/2} laid out for circular convolution
    for (int j = 0; j < std::max(n, m); ++j) {
        const std::complex<double> b = cis_l(-tw * 0.5L * j * (long double)j);
        if (j < m) B[j] = b;
        if (j > 0 && j < n) B[nfft_ - j] = b;
    }
    b_hat_ = forward(B);
    out_chirp_.resize(m);
    for (int k = 0; k < m; ++k)
        out_chirp_[k] = cis_l(tw * 0.5L * k * (long double)k);
}

VectorXcd CztPlan::run(const VectorXcd& x) const {
    VectorXcd A = VectorXcd::Zero(nfft_);
    A.head(n_) = x.cwiseProduct(a_chirp_);
    VectorXcd conv = backward(VectorXcd(forward(A).cwiseProduct(b_hat_)));
    VectorXcd out(m_);
    const double inv = 1.0 / nfft_;
    for (int k = 0; k < m_; ++k)
        out[k] = conv[k] * (inv * out_chirp_[k]);
    return out;
}

VectorXcd czt(const VectorXcd& x, int m, double theta_w, double theta_a) {
    return CztPlan(int(x.size()), m, theta_w, theta_a).run(x);
}

} // namespace dlab::fft

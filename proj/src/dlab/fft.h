#pragma once
#include <Eigen/Dense>
#include <complex>

// FFTW wrappers. Plans are created with FFTW_ESTIMATE and cached behind a
// mutex: deterministic algorithm choice, safe concurrent execution on
// distinct buffers.
namespace dlab::fft {

using Eigen::VectorXcd;
using Eigen::VectorXd;

// unnormalized forward/backward c2c DFT, any rank-1 size
VectorXcd forward(const VectorXcd& in);
VectorXcd backward(const VectorXcd& in); // backward(forward(x)) = N * x

// rank-n c2c on a flattened row-major N^n cube
VectorXcd forward_nd(const VectorXcd& in, int rank, int n_per_axis);
VectorXcd backward_nd(const VectorXcd& in, int rank, int n_per_axis);

// orthonormal DST-I of length m (its own inverse): out_k = sqrt(2/(m+1)) * sum_j in_j sin(pi (j+1)(k+1)/(m+1))
VectorXd dst1(const VectorXd& in);
VectorXcd dst1(const VectorXcd& in);

// chirp-z evaluation X[k] = sum_n x[n] a^{-n} w^{n k}, k = 0..m-1 (Bluestein).
// w and a are given as phase angles: w = e^{i theta_w}, a = e^{i theta_a};
// the quadratic chirp phases are accumulated in long double and wrapped.
// CztPlan precomputes the chirp tables; repeated transforms with the same
// geometry then cost two FFTs each.
class CztPlan {
  public:
    CztPlan(int n, int m, double theta_w, double theta_a);
    VectorXcd run(const VectorXcd& x) const;

  private:
    int n_, m_, nfft_;
    VectorXcd a_chirp_;   // a^{-j} w^{j^2/2}, length n
    VectorXcd b_hat_;     // spectrum of the convolution kernel, length nfft
    VectorXcd out_chirp_; // w^{k^2/2}, length m
};

VectorXcd czt(const VectorXcd& x, int m, double theta_w, double theta_a);

} // namespace dlab::fft

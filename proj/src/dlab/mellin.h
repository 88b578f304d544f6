#pragma once
#include "dlab/grid.h"

namespace dlab {

// P+ realized by diagonalizing the dilation generator on a log-radius grid:
// in the variable l = ln r the weighted function w(l) = e^{l/2} u(e^l) turns
// A into -i d/dl, so the tanh ramp becomes an FFT multiplier. Lines are
// handled as two reflection sectors glued at x = 0.
//
// Resampling between the uniform-r and uniform-l grids is band-limited:
// 4x spectral oversampling and a Kaiser-windowed sinc stencil.
class MellinProjector {
  public:
    explicit MellinProjector(GridPtr g, double M = 0.0, double R = 4.0, int J = 8192);
    WaveFunction apply(const WaveFunction& psi) const;

    double center() const { return M_; }
    double scale() const { return R_; }

  private:
    struct Stencil {
        std::vector<int> base;      // first tap index per target
        std::vector<double> wts;    // (2H+1) weights per target
    };

    GridPtr grid_;
    double M_, R_;
    int J_;
    double lmin_ = 0, dl_ = 0;
    VectorXd half_weight_;          // e^{l_j/2}
    VectorXd mult_;                 // (tanh((a - M)/R) + 1)/2 in FFT bin order
    Stencil to_log_;                // fine space grid -> log grid targets
    Stencil from_log_;              // fine log grid -> grid radii
    Stencil to_log_neg_;            // line only: targets -e^{l_j}

    VectorXcd sector_pipeline(const VectorXcd& w) const;
};

} // namespace dlab

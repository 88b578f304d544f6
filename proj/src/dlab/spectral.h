#pragma once
#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <string>

#include "dlab/grid.h"

// Dense spectral-collocation Hamiltonians on the half-line sine grid, their
// eigendecompositions (LAPACK dsyevd, cached in-process and optionally on
// disk under DISPERSIVE_LAB_CACHE), and small iterative solvers shared by the
// scattering and floquet modules.
namespace dlab::spectral {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct EigenBasis {
    VectorXd evals;
    MatrixXd evecs;  // columns, orthonormal in the plain l2 sense
};
using EigenBasisPtr = std::shared_ptr<const EigenBasis>;

// H = S diag(k^2) S + diag(angular/r^2 + V) on the interior points  (radial grids)
MatrixXd radial_h_matrix(const Grid& g, const VectorXd* V);

EigenBasis sym_eig(const MatrixXd& H);

// cached eigendecomposition of the free radial Hamiltonian (includes the
// centrifugal term; this is the grid's exact e^{-itH0} generator for n != 3)
EigenBasisPtr free_radial_basis(const GridPtr& g);
// cached eigendecomposition of H0 + V; tag must uniquely name V
EigenBasisPtr full_radial_basis(const GridPtr& g, const VectorXd& V, const std::string& tag);

VectorXcd eig_propagate(const EigenBasis& b, const VectorXcd& u, double t);

// eigenvalue count below x for a symmetric tridiagonal (Sturm sequence)
int sturm_count_below(const VectorXd& diag, const VectorXd& off, double x);

// restarted GMRES for functor-defined operators; returns achieved residual
double gmres(const std::function<VectorXcd(const VectorXcd&)>& apply,
             const VectorXcd& rhs, VectorXcd& x,
             const std::function<VectorXcd(const VectorXcd&)>& precond,
             double tol, int restart, int max_outer);

}  // namespace dlab::spectral

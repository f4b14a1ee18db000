#pragma once

#include <Eigen/Dense>

namespace plk {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

namespace linalg {

/// Relative singular-value cutoff used for every pseudoinverse and rank
/// decision in the library.
inline constexpr double kPinvCutoff = 1e-10;

struct PinvResult {
  MatrixXd pinv;
  Eigen::Index rank = 0;
};

/// Moore-Penrose pseudoinverse by SVD; singular values below
/// `rel_cutoff * sigma_max` are treated as zero.
PinvResult pinv(const MatrixXd& a, double rel_cutoff = kPinvCutoff);

Eigen::Index numerical_rank(const MatrixXd& a, double rel_cutoff = kPinvCutoff);

/// sigma_max / sigma_min, +inf for a singular matrix.
double condition_number(const MatrixXd& a);

/// In-place (P + P^T) / 2.
void symmetrize(MatrixXd& p);

double min_eigenvalue_sym(const MatrixXd& p);
double max_eigenvalue_sym(const MatrixXd& p);

/// Largest real part over the spectrum.
double spectral_abscissa(const MatrixXd& a);

/// Solves A^T P + P A = -Q for P. Throws IllConditioned when the
/// Kronecker system is singular (A has eigenvalues summing to zero).
MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q);

/// Matrix exponential (Pade with scaling and squaring).
MatrixXd expm(const MatrixXd& a);

/// Throws IllConditioned if P is not symmetric within `sym_tol` or has an
/// eigenvalue below `-psd_tol`.
void require_psd(const MatrixXd& p, const char* what, double sym_tol = 1e-9,
                 double psd_tol = 1e-9);

}  // namespace linalg
}  // namespace plk

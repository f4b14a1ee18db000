#include "plk/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "plk/error.hpp"

namespace plk::linalg {

PinvResult pinv(const MatrixXd& a, double rel_cutoff) {
  PinvResult out;
  out.pinv = MatrixXd::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double cut = rel_cutoff * s(0);
  VectorXd inv = VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) {
      inv(i) = 1.0 / s(i);
      ++out.rank;
    }
  }
  out.pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

Eigen::Index numerical_rank(const MatrixXd& a, double rel_cutoff) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_cutoff * s(0)) ++r;
  }
  return r;
}

double condition_number(const MatrixXd& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

void symmetrize(MatrixXd& p) {
  MatrixXd t = 0.5 * (p + p.transpose());
  p = std::move(t);
}

double min_eigenvalue_sym(const MatrixXd& p) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue_sym(const MatrixXd& p) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_abscissa(const MatrixXd& a) {
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q) {
  const Eigen::Index n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  const MatrixXd at = a.transpose();
  const MatrixXd kron = Eigen::kroneckerProduct(id, at) + Eigen::kroneckerProduct(at, id);
  Eigen::FullPivLU<MatrixXd> lu(kron);
  if (!lu.isInvertible()) throw IllConditioned("Lyapunov operator is singular");
  const VectorXd rhs = -Eigen::Map<const VectorXd>(q.data(), q.size());
  const VectorXd vp = lu.solve(rhs);
  MatrixXd p = Eigen::Map<const MatrixXd>(vp.data(), n, n);
  symmetrize(p);
  return p;
}

MatrixXd expm(const MatrixXd& a) { return a.exp(); }

void require_psd(const MatrixXd& p, const char* what, double sym_tol, double psd_tol) {
  if (p.size() == 0) return;
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= sym_tol * std::max(1.0, p.cwiseAbs().maxCoeff()))) {
    throw IllConditioned(std::string(what) + " is not symmetric");
  }
  if (!p.allFinite()) throw IllConditioned(std::string(what) + " is not finite");
  const double lo = min_eigenvalue_sym(p);
  if (lo < -psd_tol * std::max(1.0, p.cwiseAbs().maxCoeff())) {
    throw IllConditioned(std::string(what) + " has a negative eigenvalue " + std::to_string(lo));
  }
}

}  // namespace plk::linalg

#include <algorithm>
#include <cmath>
#include <vector>

#include "plk/codesign.hpp"
#include "plk/error.hpp"
#include "plk/kernels.hpp"

namespace plk::codesign {

namespace {

template <int N, int R>
double response_l1(const MatrixXd& a_dyn, const VectorXd& b_dyn, const MatrixXd& c_dyn, double abscissa,
                   const L1NormOptions& opts) {
  using MatN = Eigen::Matrix<double, N, N>;
  using VecN = Eigen::Matrix<double, N, 1>;
  using MatC = Eigen::Matrix<double, R, N>;
  using VecR = Eigen::Matrix<double, R, 1>;
  const MatC c = c_dyn;
  const Eigen::Index rows = c.rows();

  const Eigen::VectorXcd eig = a_dyn.eigenvalues();
  double fastest = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) fastest = std::max(fastest, std::abs(eig(i)));
  double dt = std::min(opts.dt, 0.2 / std::max(fastest, 1e-12));
  const double horizon = opts.horizon_factor / -abscissa;
  double steps = std::ceil(horizon / dt);
  if (steps > opts.max_samples) {
    steps = opts.max_samples;
    dt = horizon / steps;
  }
  const auto n_steps = static_cast<long>(steps);
  const MatN phi = linalg::expm(a_dyn * dt);

  constexpr long kChunk = 4096;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> buf(rows, kChunk + 1);
  std::vector<double> total(static_cast<std::size_t>(rows), 0.0);

  VecN x = b_dyn;
  buf.col(0) = c * x;
  long filled = 1;
  for (long i = 1; i <= n_steps; ++i) {
    x = phi * x;
    const VecR y = c * x;
    buf.col(filled++) = y;
    if (filled == kChunk + 1 || i == n_steps) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        total[static_cast<std::size_t>(r)] +=
            kernels::abs_trapezoid({buf.row(r).data(), static_cast<std::size_t>(filled)}, dt);
      }
      buf.col(0) = buf.col(filled - 1);
      filled = 1;
    }
  }
  if (!x.allFinite()) throw Divergence("impulse response became non-finite");

  // Exponential tail beyond the horizon.
  const double tail_state = x.norm() / -abscissa;
  double best = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    best = std::max(best, total[static_cast<std::size_t>(r)] + c.row(r).norm() * tail_state);
  }
  return best;
}

}  // namespace

double impulse_l1_norm(const MatrixXd& a, const VectorXd& b, const MatrixXd& c, const L1NormOptions& opts) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n || c.cols() != n || n == 0 || c.rows() == 0) {
    throw InvalidArgument("impulse_l1_norm: dimension mismatch");
  }
  if (!(opts.dt > 0.0 && opts.horizon_factor > 0.0 && opts.max_samples >= 1.0)) {
    throw InvalidArgument("impulse_l1_norm: bad options");
  }
  const double abscissa = linalg::spectral_abscissa(a);
  if (!(abscissa < 0.0)) throw Divergence("realization is not stable; L1 norm diverges");
  if (n == 5 && c.rows() == 4) return response_l1<5, 4>(a, b, c, abscissa, opts);
  return response_l1<Eigen::Dynamic, Eigen::Dynamic>(a, b, c, abscissa, opts);
}

double filtered_plant_l1_norm(const Mat4& a_m, const Vec4& b_m, double k, double w, const L1NormOptions& opts) {
  if (!(k > 0.0 && w > 0.0)) throw InvalidArgument("filter gain k and w must be positive");
  MatrixXd a = MatrixXd::Zero(5, 5);
  a.topLeftCorner(4, 4) = a_m;
  a.block(0, 4, 4, 1) = -b_m;
  a(4, 4) = -w * k;
  VectorXd b(5);
  b.head(4) = b_m;
  b(4) = w * k;
  MatrixXd c = MatrixXd::Zero(4, 5);
  c.leftCols(4).setIdentity();
  return impulse_l1_norm(a, b, c, opts);
}

}  // namespace plk::codesign

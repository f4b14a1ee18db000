#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "plk/codesign.hpp"
#include "plk/error.hpp"

namespace plk::codesign {

namespace {

double lyapunov_residual(const Mat4& p, const Mat4& a) {
  const MatrixXd form = a.transpose() * p + p * a;
  MatrixXd s = form;
  linalg::symmetrize(s);
  return linalg::max_eigenvalue_sym(s);
}


std::array<Mat4, 10> symmetric_basis() {
  std::array<Mat4, 10> out;
  std::size_t n = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      Mat4 e = Mat4::Zero();
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      out[n++] = e;
    }
  }
  return out;
}

std::optional<Mat4> barrier_common_lyapunov(const Mat4& a_min, const Mat4& a_max, double tol) {
  using Vec11 = Eigen::Matrix<double, 11, 1>;
  using Mat11 = Eigen::Matrix<double, 11, 11>;
  static const std::array<Mat4, 10> basis = symmetric_basis();
  const std::array<const Mat4*, 2> ends{&a_min, &a_max};
  const Mat4 eye = Mat4::Identity();
  const double trace_cap = 1e6;

  const auto unpack = [&](const Vec11& z) {
    Mat4 p = Mat4::Zero();
    for (std::size_t j = 0; j < 10; ++j) p += z(static_cast<Eigen::Index>(j)) * basis[j];
    return p;
  };
  // Directional pieces of each matrix constraint (constant in z).
  std::array<std::array<Mat4, 11>, 3> dirs;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 10; ++j) dirs[i][j] = -(ends[i]->transpose() * basis[j] + basis[j] * *ends[i]);
    dirs[i][10] = eye;
  }
  for (std::size_t j = 0; j < 10; ++j) dirs[2][j] = basis[j];
  dirs[2][10] = Mat4::Zero();
  std::array<double, 11> trace_dir{};
  for (std::size_t j = 0; j < 10; ++j) trace_dir[j] = -basis[j].trace();

  const auto constraints = [&](const Vec11& z) {
    const Mat4 p = unpack(z);
    std::array<Mat4, 3> g;
    for (std::size_t i = 0; i < 2; ++i) g[i] = z(10) * eye - (ends[i]->transpose() * p + p * *ends[i]);
    g[2] = p - eye;
    return std::make_pair(g, trace_cap - p.trace());
  };
  const auto barrier = [&](const Vec11& z, double s, bool* ok) {
    const auto [g, slack] = constraints(z);
    double val = s * z(10);
    *ok = slack > 0.0;
    if (!*ok) return 0.0;
    for (const auto& m : g) {
      Eigen::LLT<Mat4> llt(m);
      if (llt.info() != Eigen::Success) {
        *ok = false;
        return 0.0;
      }
      val -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return val - std::log(slack);
  };

  Vec11 z = Vec11::Zero();
  for (std::size_t j = 0; j < 10; ++j) {
    if (basis[j](0, 0) + basis[j](1, 1) + basis[j](2, 2) + basis[j](3, 3) == 1.0) {
      z(static_cast<Eigen::Index>(j)) = 2.0;
    }
  }
  {
    const Mat4 p = unpack(z);
    double top = 0.0;
    for (const auto* a : ends) {
      MatrixXd r = a->transpose() * p + p * *a;
      top = std::max(top, linalg::max_eigenvalue_sym(r));
    }
    z(10) = top + 1.0;
  }

  double s = 1.0;
  for (int outer = 0; outer < 60; ++outer) {
    for (int it = 0; it < 60; ++it) {
      const auto [g, slack] = constraints(z);
      Vec11 grad = Vec11::Zero();
      Mat11 hess = Mat11::Zero();
      grad(10) = s;
      for (std::size_t c = 0; c < 3; ++c) {
        const Mat4 inv = g[c].inverse();
        std::array<Mat4, 11> w;
        for (std::size_t j = 0; j < 11; ++j) w[j] = inv * dirs[c][j];
        for (std::size_t j = 0; j < 11; ++j) {
          grad(static_cast<Eigen::Index>(j)) -= w[j].trace();
          for (std::size_t k = j; k < 11; ++k) {
            const double h = (w[j] * w[k]).trace();
            hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += h;
            if (k != j) hess(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) += h;
          }
        }
      }
      for (std::size_t j = 0; j < 11; ++j) {
        grad(static_cast<Eigen::Index>(j)) -= trace_dir[j] / slack;
        for (std::size_t k = 0; k < 11; ++k) {
          hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) +=
              trace_dir[j] * trace_dir[k] / (slack * slack);
        }
      }
      const Vec11 step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      if (!step.allFinite() || decrement < 1e-10) break;
      bool ok = false;
      const double f0 = barrier(z, s, &ok);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec11 trial = z + alpha * step;
        const double f1 = barrier(trial, s, &ok);
        if (ok && f1 <= f0 - 0.25 * alpha * decrement) {
          z = trial;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    const Mat4 p = unpack(z);
    const auto cert = verify_common_lyapunov(p, a_min, a_max, tol);
    if (cert.ok) return p;
    if (12.0 / s < 1e-12) break;
    s *= 4.0;
  }
  return std::nullopt;
}

}  // namespace

LyapunovCertificate verify_common_lyapunov(const Mat4& p, const Mat4& a_min, const Mat4& a_max,
                                           double tol) {
  LyapunovCertificate cert;
  MatrixXd ps = p;
  linalg::symmetrize(ps);
  cert.p_min_eig = linalg::min_eigenvalue_sym(ps);
  const Mat4 sym = ps;
  cert.residual_at_min = lyapunov_residual(sym, a_min);
  cert.residual_at_max = lyapunov_residual(sym, a_max);
  cert.ok = cert.p_min_eig > 0.0 && cert.residual_at_min < -tol && cert.residual_at_max < -tol;
  return cert;
}

Vec4 place_poles(const Mat4& a, const Vec4& b, const std::array<double, 4>& poles) {
  Mat4 ctrb;
  ctrb.col(0) = b;
  for (int i = 1; i < 4; ++i) ctrb.col(i) = a * ctrb.col(i - 1);
  if (linalg::numerical_rank(ctrb, 1e-12) < 4 || linalg::condition_number(ctrb) > 1e14) {
    throw InvalidArgument("pair (A, b) is not controllable");
  }
  Mat4 phi = Mat4::Identity();
  for (double p : poles) phi = phi * (a - p * Mat4::Identity());
  const Eigen::RowVector4d last = Eigen::RowVector4d::UnitW();
  const Eigen::RowVector4d k = last * ctrb.inverse() * phi;
  return k.transpose();
}

GainDesign find_common_lyapunov(const Mat4& a_min, const Mat4& a_max, const GainDesignOptions& opts) {
  if (linalg::spectral_abscissa(a_min) >= 0.0 || linalg::spectral_abscissa(a_max) >= 0.0) {
    std::ostringstream os;
    os << "endpoint matrix not Hurwitz (abscissa " << linalg::spectral_abscissa(a_min) << ", "
       << linalg::spectral_abscissa(a_max) << ")";
    throw Infeasible(os.str());
  }
  const int rounds = std::max(1, opts.max_rounds);
  const Mat4 eye = Mat4::Identity();
  const Mat4 p_lo = linalg::solve_lyapunov(a_min, eye);
  const Mat4 p_hi = linalg::solve_lyapunov(a_max, eye);

  GainDesign best;
  double best_score = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Mat4& p, int round) {
    const auto cert = verify_common_lyapunov(p, a_min, a_max, opts.tol);
    const double score = std::max(cert.residual_at_min, cert.residual_at_max) /
                         std::max(cert.p_min_eig, 1e-300);
    if (cert.p_min_eig > 0.0 && score < best_score) {
      best_score = score;
      best.p = p;
      best.certificate = cert;
      best.rounds = round + 1;
    }
    return cert.ok;
  };

  for (int r = 0; r < rounds; ++r) {
    const double t = rounds == 1 ? 1.0 : 1.0 - static_cast<double>(r) / (rounds - 1);
    const Mat4 a_t = t * a_min + (1.0 - t) * a_max;
    if (linalg::spectral_abscissa(a_t) < 0.0) {
      Mat4 p = linalg::solve_lyapunov(a_t, eye);
      if (consider(p, r)) return best;
    }
    const Mat4 blend = t * p_lo + (1.0 - t) * p_hi;
    if (consider(blend, r)) return best;
  }
  // Blends alone failed: solve min t s.t. A_i^T P + P A_i <= t I, P >= I,
  // tr P <= c by a log-barrier Newton method.
  {
    const auto found = barrier_common_lyapunov(a_min, a_max, opts.tol);
    if (found && consider(*found, rounds)) return best;
  }
  std::ostringstream os;
  os << "no common Lyapunov matrix found after " << rounds << " rounds; best residuals "
     << best.certificate.residual_at_min << " / " << best.certificate.residual_at_max;
  throw Infeasible(os.str());
}

GainDesign design_km_p(double c_front, double c_rear, double v_min, double v_max,
                       const vehicle::VehicleParams& params, const GainDesignOptions& opts) {
  if (!(v_min > 0.0 && v_max > v_min)) throw InvalidArgument("need 0 < V_min < V_max");
  const double v_mid = 0.5 * (v_min + v_max);
  const auto mid = vehicle::error_matrices(v_mid, c_front, c_rear, params);
  const Vec4 k_m = place_poles(mid.a, mid.b, opts.poles);
  const Mat4 a_min = nominal_closed_loop(c_front, c_rear, v_min, k_m, params);
  const Mat4 a_max = nominal_closed_loop(c_front, c_rear, v_max, k_m, params);
  GainDesign out = find_common_lyapunov(a_min, a_max, opts);
  out.k_m = k_m;
  return out;
}

}  // namespace plk::codesign

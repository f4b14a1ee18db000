#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plk/codesign.hpp"
#include "plk/error.hpp"

namespace plk::codesign {

namespace {

std::vector<double> grid_points(const Interval& iv, int density) {
  if (iv.width() <= 0.0 || density <= 1) return {iv.center()};
  std::vector<double> pts(static_cast<std::size_t>(density));
  for (int i = 0; i < density; ++i) pts[static_cast<std::size_t>(i)] = iv.lo + iv.width() * i / (density - 1);
  return pts;
}

}  // namespace

Eigen::Matrix<double, 5, 5> ag_matrix(const Mat4& a_m, const Vec4& b_m, double k, const Vec4& theta, double w) {
  Eigen::Matrix<double, 5, 5> ag;
  ag.topLeftCorner<4, 4>() = a_m + b_m * theta.transpose();
  ag.topRightCorner<4, 1>() = b_m * w;
  ag.bottomLeftCorner<1, 4>() = -k * theta.transpose();
  ag(4, 4) = -k * w;
  return ag;
}

namespace {

// Odometer over the product grid; returns false as soon as `stop` is set and
// an abscissa reaches -tol.
bool scan_grid(const Mat4& a_m, const Vec4& b_m, double k, const std::array<std::vector<double>, 5>& axes,
               double tol, bool stop, AgCheck& out) {
  std::array<std::size_t, 5> idx{};
  Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> solver;
  while (true) {
    Vec4 th;
    for (int i = 0; i < 4; ++i) th(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    const double w = axes[4][idx[4]];
    solver.compute(ag_matrix(a_m, b_m, k, th, w), false);
    const double abscissa = solver.eigenvalues().real().maxCoeff();
    out.worst_abscissa = std::max(out.worst_abscissa, abscissa);
    ++out.evaluated;
    if (stop && abscissa >= -tol) return false;

    std::size_t d = 0;
    while (d < 5 && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == 5) return true;
  }
}

}  // namespace

AgCheck check_ag_hurwitz(const Mat4& a_m, const Vec4& b_m, double k, const std::array<Interval, 4>& theta,
                         const Interval& omega, int grid_density, double tol, bool stop_at_failure) {
  for (const auto& t : theta) {
    if (t.lo > t.hi) throw InvalidArgument("empty theta box");
  }
  if (omega.lo > omega.hi) throw InvalidArgument("empty omega interval");
  // Grids with at least two points per non-degenerate axis include every vertex.
  const int density = std::max(2, grid_density);
  std::array<std::vector<double>, 5> axes;
  for (std::size_t i = 0; i < 4; ++i) axes[i] = grid_points(theta[i], density);
  axes[4] = grid_points(omega, density);

  AgCheck out;
  out.worst_abscissa = -std::numeric_limits<double>::infinity();
  if (stop_at_failure) {
    std::array<std::vector<double>, 5> corners;
    for (std::size_t i = 0; i < 5; ++i) corners[i] = grid_points(i < 4 ? theta[i] : omega, 2);
    if (!scan_grid(a_m, b_m, k, corners, tol, true, out)) return out;
  }
  out.ok = scan_grid(a_m, b_m, k, axes, tol, stop_at_failure, out) && out.worst_abscissa < -tol;
  return out;
}

SpeedFeasibility evaluate_speed(const DesignConfig& cfg, const PriorDistribution& prior_f,
                                const PriorDistribution& prior_r, const GainDesign& gains, double speed,
                                const vehicle::VehicleParams& params, const vehicle::RoadProfile& profile) {
  if (!(cfg.k_bar > 0.0) || cfg.k_candidates < 1) throw InvalidArgument("k_bar and k_candidates must be positive");
  SpeedFeasibility out;
  out.bounds = uncertainty_bounds(prior_f, prior_r, speed, gains.k_m, params, profile);
  const auto mats = vehicle::error_matrices(speed, prior_f.mean, prior_r.mean, params);
  const Mat4 a_m = mats.a - mats.b * gains.k_m.transpose();
  const Vec4 b_m = mats.b;
  const auto ws = grid_points(out.bounds.omega, std::max(2, cfg.omega_grid));

  out.best_g_norm = std::numeric_limits<double>::infinity();
  for (int j = cfg.k_candidates; j >= 1; --j) {
    const double k = cfg.k_bar * j / cfg.k_candidates;
    double worst = 0.0;
    for (double w : ws) {
      worst = std::max(worst, filtered_plant_l1_norm(a_m, b_m, k, w, cfg.norm));
      if (worst > cfg.lambda_gp) break;
    }
    out.best_g_norm = std::min(out.best_g_norm, worst);
    // The norm decreases with k on this plant family, so smaller k cannot recover.
    if (worst > cfg.lambda_gp) break;
    if (out.feasible && worst >= out.g_norm) continue;
    const auto ag = check_ag_hurwitz(a_m, b_m, k, out.bounds.theta, out.bounds.omega, cfg.ag_grid);
    if (!ag.ok) continue;
    out.feasible = true;
    out.k = k;
    out.g_norm = worst;
    out.ag = ag;
  }
  return out;
}

DesignResult optimize_velocity(const DesignConfig& cfg, const PriorDistribution& prior_f,
                               const PriorDistribution& prior_r, const GainDesign& gains,
                               const vehicle::VehicleParams& params, const vehicle::RoadProfile& profile) {
  if (!(cfg.v_min > 0.0 && cfg.v_max > cfg.v_min)) throw InvalidArgument("need 0 < V_min < V_max");
  if (!(cfg.v_resolution > 0.0)) throw InvalidArgument("velocity resolution must be positive");
  if (!(cfg.lambda_gp > 0.0)) throw InvalidArgument("lambda_gp must be positive");

  const Mat4 a_min = nominal_closed_loop(prior_f.mean, prior_r.mean, cfg.v_min, gains.k_m, params);
  const Mat4 a_max = nominal_closed_loop(prior_f.mean, prior_r.mean, cfg.v_max, gains.k_m, params);
  const auto cert = verify_common_lyapunov(gains.p, a_min, a_max);
  if (!cert.ok) {
    std::ostringstream os;
    os << "k_m / P fail the common Lyapunov check (residuals " << cert.residual_at_min << ", "
       << cert.residual_at_max << ", min eig P " << cert.p_min_eig << ")";
    throw Infeasible(os.str());
  }

  const auto finish = [&](double v, const SpeedFeasibility& f) {
    DesignResult r;
    r.c_hat_f = prior_f.mean;
    r.c_hat_r = prior_r.mean;
    r.k_m = gains.k_m;
    r.p = gains.p;
    r.k = f.k;
    r.speed = v;
    r.g_norm = f.g_norm;
    r.lyapunov = cert;
    r.ag = f.ag;
    r.bounds = f.bounds;
    return r;
  };

  const auto top = evaluate_speed(cfg, prior_f, prior_r, gains, cfg.v_max, params, profile);
  if (top.feasible) return finish(cfg.v_max, top);
  auto low = evaluate_speed(cfg, prior_f, prior_r, gains, cfg.v_min, params, profile);
  if (!low.feasible) {
    std::ostringstream os;
    os << "no feasible speed in [" << cfg.v_min << ", " << cfg.v_max << "]: at V_min the smallest worst-case "
       << "L1 norm is " << low.best_g_norm << " against the bound " << cfg.lambda_gp;
    throw Infeasible(os.str());
  }
  double lo = cfg.v_min;
  double hi = cfg.v_max;
  while (hi - lo > cfg.v_resolution) {
    const double mid = 0.5 * (lo + hi);
    auto f = evaluate_speed(cfg, prior_f, prior_r, gains, mid, params, profile);
    if (f.feasible) {
      lo = mid;
      low = std::move(f);
    } else {
      hi = mid;
    }
  }
  return finish(lo, low);
}

}  // namespace plk::codesign

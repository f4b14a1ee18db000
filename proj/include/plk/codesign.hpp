#pragma once

// Proactive design of the lane-keeping controller from a stiffness prior:
// uncertainty sets, a state-feedback gain with a common Lyapunov matrix over
// the speed range, the L1 norm of the filtered plant, and the choice of speed
// and filter bandwidth.

#include <optional>
#include <string>
#include <vector>

#include "plk/bounds.hpp"
#include "plk/linalg.hpp"
#include "plk/vehicle.hpp"

namespace plk::codesign {

/// mean -/+ 1.96 sigma. Throws InvalidArgument for a negative variance or a
/// non-positive lower end.
Interval confidence_interval(const PriorDistribution& prior);

/// Sets of the adaptive plant at speed V given front/rear priors. Throws
/// InvalidArgument when the vehicle or road violate the modelling
/// assumptions, or V <= 0.
UncertaintyBounds uncertainty_bounds(const PriorDistribution& prior_f, const PriorDistribution& prior_r,
                                     double speed, const Vec4& k_m,
                                     const vehicle::VehicleParams& params,
                                     const vehicle::RoadProfile& profile);

/// Same sets for nominal stiffnesses that differ from the interval centres
/// (posterior intervals around a fixed design nominal). Intervals must be
/// positive.
UncertaintyBounds uncertainty_bounds(double c_hat_f, const Interval& c_f, double c_hat_r, const Interval& c_r,
                                     double speed, const Vec4& k_m, const vehicle::VehicleParams& params,
                                     const vehicle::RoadProfile& profile);

/// A_m(V) = A(V, Chat_f, Chat_r) - b(Chat_f) k_m^T.
Mat4 nominal_closed_loop(double c_front, double c_rear, double speed, const Vec4& k_m,
                         const vehicle::VehicleParams& params);

/// Convex weight with A_m(V) = alpha A_m(V_min) + (1 - alpha) A_m(V_max).
double speed_weight(double speed, double v_min, double v_max);

struct LyapunovCertificate {
  bool ok = false;
  double p_min_eig = 0.0;
  double residual_at_min = 0.0;  // largest eigenvalue of A^T P + P A at V_min
  double residual_at_max = 0.0;
};

/// Checks P > 0 and A^T P + P A < -tol I at both endpoint matrices.
LyapunovCertificate verify_common_lyapunov(const Mat4& p, const Mat4& a_min, const Mat4& a_max,
                                           double tol = 1e-9);

/// Ackermann pole placement for a single-input pair: returns k with
/// eig(A - b k^T) = poles. Throws InvalidArgument if (A, b) is not
/// controllable.
Vec4 place_poles(const Mat4& a, const Vec4& b, const std::array<double, 4>& poles);

struct GainDesign {
  Vec4 k_m = Vec4::Zero();
  Mat4 p = Mat4::Identity();
  LyapunovCertificate certificate;
  int rounds = 0;
};

struct GainDesignOptions {
  std::array<double, 4> poles{-2.0, -2.5, -3.0, -3.5};
  int max_rounds = 50;
  double tol = 1e-9;
};

/// Places A_m at the mid speed, then searches a common Lyapunov matrix for
/// both endpoints. Throws Infeasible with the best residual when none found.
GainDesign design_km_p(double c_front, double c_rear, double v_min, double v_max,
                       const vehicle::VehicleParams& params, const GainDesignOptions& opts = {});

/// Common-Lyapunov search for given endpoint matrices. Throws Infeasible.
GainDesign find_common_lyapunov(const Mat4& a_min, const Mat4& a_max, const GainDesignOptions& opts = {});

struct L1NormOptions {
  double dt = 1e-3;           // upper bound on the quadrature step
  double horizon_factor = 50; // horizon = factor / |spectral abscissa|
  double max_samples = 4e6;
};

/// max_i of the integral of |y_i(t)| for the impulse response
/// y = C exp(A t) B of a stable single-input system, with an exponential
/// tail correction. Throws Divergence if A is not Hurwitz.
double impulse_l1_norm(const MatrixXd& a, const VectorXd& b, const MatrixXd& c,
                       const L1NormOptions& opts = {});

/// ||H(s)(1 - C(s))||_L1 with H = (sI - A_m)^-1 b_m and C = wk/(s + wk).
double filtered_plant_l1_norm(const Mat4& a_m, const Vec4& b_m, double k, double w,
                              const L1NormOptions& opts = {});

struct AgCheck {
  bool ok = false;
  double worst_abscissa = 0.0;
  long evaluated = 0;
};

/// 5x5 closed-loop matrix [[A_m + b_m th^T, b_m w], [-k th^T, -k w]].
Eigen::Matrix<double, 5, 5> ag_matrix(const Mat4& a_m, const Vec4& b_m, double k, const Vec4& theta,
                                      double w);

/// Samples the box Theta x Omega at its vertices and a uniform grid with
/// `grid_density` points per axis. Sampling is a heuristic, not a proof of
/// Hurwitzness over the whole box. With `stop_at_failure` the vertices are
/// tried first and the scan ends at the first failing sample, so
/// worst_abscissa and evaluated only cover what was visited.
AgCheck check_ag_hurwitz(const Mat4& a_m, const Vec4& b_m, double k,
                         const std::array<Interval, 4>& theta, const Interval& omega,
                         int grid_density = 5, double tol = 1e-9, bool stop_at_failure = false);

struct DesignConfig {
  double lambda_gp = 0.585;
  double k_bar = 10.0;
  double v_min = 10.0;
  double v_max = 25.0;
  double v_resolution = 0.01;
  int omega_grid = 5;
  int ag_grid = 5;
  int k_candidates = 4;  // k_bar * j / k_candidates, j = k_candidates..1
  L1NormOptions norm;
};

struct DesignResult {
  double c_hat_f = 0.0;
  double c_hat_r = 0.0;
  Vec4 k_m = Vec4::Zero();
  Mat4 p = Mat4::Identity();
  double k = 0.0;
  double speed = 0.0;
  double g_norm = 0.0;
  LyapunovCertificate lyapunov;
  AgCheck ag;
  UncertaintyBounds bounds;
};

struct SpeedFeasibility {
  bool feasible = false;
  double k = 0.0;
  double g_norm = 0.0;         // worst over the omega grid at the chosen k
  double best_g_norm = 0.0;    // smallest worst-case norm among candidates
  AgCheck ag;
  UncertaintyBounds bounds;
};

/// Feasibility of one speed: some candidate k <= k_bar meets the norm bound
/// for every w on the grid and passes the A_g check.
SpeedFeasibility evaluate_speed(const DesignConfig& cfg, const PriorDistribution& prior_f,
                                const PriorDistribution& prior_r, const GainDesign& gains,
                                double speed, const vehicle::VehicleParams& params,
                                const vehicle::RoadProfile& profile);

/// Largest feasible speed in [v_min, v_max] found by bisection from v_max
/// down to the configured resolution. Throws Infeasible with diagnostics
/// when even v_min fails.
DesignResult optimize_velocity(const DesignConfig& cfg, const PriorDistribution& prior_f,
                               const PriorDistribution& prior_r, const GainDesign& gains,
                               const vehicle::VehicleParams& params,
                               const vehicle::RoadProfile& profile);

}  // namespace plk::codesign

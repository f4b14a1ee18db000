#pragma once

// L1 adaptive controller on the nominal plant
//   xdot = A_m x + b_m (w u_ad + theta^T x + sigma),
// with state predictor, projection-based adaptation, and the low-pass
// control law u_ad = -k D(s) (eta_hat - k_g r), D(s) = 1/s.

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "plk/bounds.hpp"
#include "plk/linalg.hpp"
#include "plk/vehicle.hpp"

namespace plk::l1ac {

struct L1Config {
  Mat4 a_m = Mat4::Zero();
  Vec4 b_m = Vec4::Zero();
  Vec4 c = Vec4::UnitX();
  Vec4 k_m = Vec4::Zero();
  Mat4 p = Mat4::Identity();
  double gamma = 1e5;
  double k = 10.0;
  double k_g = 0.0;
  UncertaintyBounds bounds;
  double proj_eps = 0.1;

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

/// Fills k_g = -1 / (c^T A_m^-1 b_m) and validates.
L1Config make_config(const Mat4& a_m, const Vec4& b_m, const Vec4& k_m, const Mat4& p, double gamma,
                     double k, const UncertaintyBounds& bounds, double proj_eps = 0.1,
                     const Vec4& c = Vec4::UnitX());

struct AdaptiveState {
  Vec4 x_hat = Vec4::Zero();
  double w_hat = 1.0;
  Vec4 theta_hat = Vec4::Zero();
  double sigma_hat = 0.0;
  double u_int = 0.0;
  double u_ad = 0.0;
};

/// w_hat = 1, theta_hat = 0, sigma_hat = 0, x_hat = x0.
AdaptiveState initial_state(const Vec4& x0);

/// Projection domain for one coordinate: the interval widened by
/// eps * width on each side.
Interval inflated(const Interval& set, double eps);

/// Smooth projection of `direction` at `estimate` for an interval set.
/// Inside the set, or pointing inward, the direction is returned unchanged;
/// in the inflation layer the outward rate is scaled by
/// 1 - (r^2 - r0^2) / (r1^2 - r0^2), r the distance to the centre, r0 the
/// half-width and r1 the inflated half-width. A zero-width set pins the
/// estimate. Throws InvalidArgument outside the inflated set.
double projection(double estimate, double direction, const Interval& set, double eps);

/// Per-coordinate projection on a box.
Vec4 projection(const Vec4& estimate, const Vec4& direction, const std::array<Interval, 4>& box, double eps);

/// eta_hat = w_hat u_ad + theta_hat^T x + sigma_hat.
double lumped_estimate(const AdaptiveState& s, const Vec4& x);

/// One RK4 step of the predictor with x and u_ad held. Throws Divergence on
/// a non-finite result.
Vec4 predictor_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad, double dt);

struct Estimates {
  double w_hat = 1.0;
  Vec4 theta_hat = Vec4::Zero();
  double sigma_hat = 0.0;
};

/// Rates of the three projected gradient laws at the current state.
Estimates adaptation_rates(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad);

/// One RK4 step of the adaptation laws with x_tilde, x and u_ad held; the
/// result is clipped to the inflated sets so the discrete map cannot leave
/// the domain the continuous flow preserves.
Estimates adaptation_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad, double dt);

/// One RK4 step of u_int' = -k (eta_hat - k_g r) with u_ad = u_int.
double control_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double r, double dt);

/// True when every estimate lies in its inflated set (tolerance 1e-12
/// relative to the set size).
bool estimates_in_domain(const AdaptiveState& s, const L1Config& cfg);

struct TraceRow {
  double t = 0.0;
  Vec4 x = Vec4::Zero();
  double u_m = 0.0;
  double u_ad = 0.0;
  double w_hat = 0.0;
  double sigma_hat = 0.0;
  Vec4 theta_hat = Vec4::Zero();
  double radius = 0.0;
  double k = 0.0;
};

struct Metrics {
  double max_abs_x1 = 0.0;
  double max_abs_x1_after_start = 0.0;  // over every integration step with t > 0
  double max_abs_x2 = 0.0;
  double rms_x1 = 0.0;
  double rms_x2 = 0.0;
  double max_abs_u = 0.0;
  long steps = 0;
  long projection_violations = 0;
};

struct ClosedLoopOptions {
  double duration = 30.0;
  double dt = 1e-4;
  Vec4 x0 = Vec4::Zero();
  double record_interval = 0.01;  // trace decimation; every step is still simulated
  double r = 0.0;
  double divergence_norm = 1e6;
  double hook_period = 0.0;  // 0 disables the periodic hook
};

struct ClosedLoopResult {
  std::vector<TraceRow> trace;
  Metrics metrics;
  L1Config final_config;
  AdaptiveState final_state;
};

/// Called every hook_period seconds with the simulated time; may retune the
/// controller (for instance the filter gain k).
using TickHook = std::function<void(double t, L1Config& cfg)>;

/// Sample-and-hold simulation of the true plant `plant` driven by
/// u = -k_m x + u_ad along `profile` at the plant's speed (s = V t). Throws
/// Divergence when |x| exceeds the divergence norm or turns non-finite.
ClosedLoopResult closed_loop(const vehicle::LateralMatrices& plant, L1Config cfg,
                             const vehicle::RoadProfile& profile, const ClosedLoopOptions& opts,
                             const TickHook& hook = {});

/// Matched uncertainty of the true plant relative to the nominal one:
/// w = C_f / Chat_f, theta = b_m^+ (A - A_hat)^T + (1 - w) k_m and the
/// disturbance gain sigma / yaw_rate = b_m^+ g.
struct MatchedUncertainty {
  double w = 1.0;
  Vec4 theta = Vec4::Zero();
  double sigma_gain = 0.0;
};

MatchedUncertainty matched_uncertainty(const vehicle::LateralMatrices& plant,
                                       const vehicle::LateralMatrices& nominal, const Vec4& k_m);

/// Non-adaptive reference system: the true plant under
/// u_ref' = -k (w u_ref + theta^T x + sigma(t) - k_g r) with the true
/// matched parameters.
ClosedLoopResult reference_system(const vehicle::LateralMatrices& plant,
                                  const vehicle::LateralMatrices& nominal, const L1Config& cfg,
                                  const vehicle::RoadProfile& profile, const ClosedLoopOptions& opts);

}  // namespace plk::l1ac

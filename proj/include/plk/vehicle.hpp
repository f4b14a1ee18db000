#pragma once

// Linear bicycle model of the lateral dynamics and its lane-error form
//   xdot = A(V,Cf,Cr) x + b(Cf) u + g(V,Cf,Cr) * psi_dot_des,
// with x = [lateral error, its rate, yaw error, its rate] and u the front
// steering angle.

#include <functional>
#include <limits>
#include <variant>

#include "plk/linalg.hpp"

namespace plk::vehicle {

struct VehicleParams {
  double mass = 1573.0;        // kg
  double yaw_inertia = 2873.0; // kg m^2
  double l_front = 1.1;        // m
  double l_rear = 1.58;        // m

  void validate() const;  // all positive, else InvalidArgument
};

/// Constant radius; an infinite radius is a straight road.
struct ConstantRoad {
  double radius = std::numeric_limits<double>::infinity();
};

/// R(s) = amplitude * sin(s / period) + offset.
struct SinusoidalRoad {
  double amplitude = 15.0;
  double period = 120.0;
  double offset = 30.0;
};

/// Road radius as a function of arc length. Curvature is what gets stored so
/// a straight road has no singular value.
class RoadProfile {
 public:
  RoadProfile() = default;
  RoadProfile(ConstantRoad c);
  RoadProfile(SinusoidalRoad s);

  double curvature(double s) const;
  /// +inf on a straight road.
  double radius(double s) const;
  /// dR/ds; zero for a constant road.
  double radius_slope(double s) const;

  /// Smallest radius over all arc lengths (R_lower); +inf when straight.
  double min_radius() const;
  /// max over s of |dR/dt| / R^2 with ds/dt = speed, sampled densely over
  /// one period.
  double rdot_bound(double speed) const;

  bool is_straight() const;
  const std::variant<ConstantRoad, SinusoidalRoad>& law() const noexcept { return law_; }

 private:
  std::variant<ConstantRoad, SinusoidalRoad> law_{ConstantRoad{}};
};

struct LateralMatrices {
  Mat4 a;
  Vec4 b;
  Vec4 g;
  double speed = 0.0;
  double c_front = 0.0;
  double c_rear = 0.0;
};

struct RawMatrices {
  Mat4 a;
  Vec4 b;
};

/// Dynamics of p = [p_y, p_y_dot, psi, psi_dot]. Stiffness may be zero here
/// (used to isolate the kinematic part); V must be positive.
RawMatrices raw_matrices(double speed, double c_front, double c_rear, const VehicleParams& params);

/// Lane-error dynamics. Throws InvalidArgument for non-positive V or stiffness.
LateralMatrices error_matrices(double speed, double c_front, double c_rear,
                               const VehicleParams& params);

/// V / R(s). Throws InvalidArgument if R(s) <= 0.
double desired_yaw_rate(const RoadProfile& profile, double s, double speed);

struct AssumptionReport {
  bool axle_order_ok = false;  // l_r >= l_f
  double axle_margin = 0.0;    // l_r - l_f
  bool inertia_ok = false;     // I_z l_r / l_f - m >= 0
  double inertia_margin = 0.0;
  bool radius_ok = false;      // R >= R_lower > 0
  double radius_lower = 0.0;
  bool all_ok() const { return axle_order_ok && inertia_ok && radius_ok; }
};

AssumptionReport check_assumptions(const VehicleParams& params, const RoadProfile& profile);

/// Classical RK4 step of a time-varying linear-affine system.
template <class Deriv>
Vec4 rk4_step(const Deriv& f, double t, const Vec4& x, double dt) {
  const Vec4 k1 = f(t, x);
  const Vec4 k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vec4 k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vec4 k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One RK4 step of xdot = A x + b u + g * yaw_rate with u and yaw_rate held.
/// Throws Divergence on a non-finite result, InvalidArgument for dt <= 0.
Vec4 integrate_step(const Vec4& x, const LateralMatrices& mats, double u, double yaw_rate, double dt);

/// Same, with the desired yaw rate evaluated along the step.
Vec4 integrate_step(const Vec4& x, const LateralMatrices& mats, double u,
                    const std::function<double(double)>& yaw_rate, double t, double dt);

}  // namespace plk::vehicle

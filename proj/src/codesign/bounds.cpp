#include <algorithm>
#include <cmath>
#include <string>

#include "plk/codesign.hpp"
#include "plk/error.hpp"

namespace plk::codesign {

namespace {

Interval product(const Interval& a, const Interval& b) {
  const double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

}  // namespace

Interval confidence_interval(const PriorDistribution& prior) {
  if (!(prior.variance >= 0.0) || !std::isfinite(prior.mean)) {
    throw InvalidArgument("prior variance must be non-negative");
  }
  const Interval ci{prior.lower(), prior.upper()};
  if (!(ci.lo > 0.0)) {
    throw InvalidArgument("prior admits non-positive stiffness (lower end " + std::to_string(ci.lo) + ")");
  }
  return ci;
}

UncertaintyBounds uncertainty_bounds(double c_hat_f, const Interval& cf, double c_hat_r, const Interval& cr,
                                     double speed, const Vec4& k_m, const vehicle::VehicleParams& params,
                                     const vehicle::RoadProfile& profile) {
  params.validate();
  if (!(speed > 0.0)) throw InvalidArgument("speed must be positive");
  if (!(cf.lo > 0.0 && cr.lo > 0.0 && cf.lo <= cf.hi && cr.lo <= cr.hi)) {
    throw InvalidArgument("stiffness intervals must be positive and non-empty");
  }
  if (!(c_hat_f > 0.0 && c_hat_r > 0.0)) throw InvalidArgument("nominal stiffness must be positive");
  const auto rep = vehicle::check_assumptions(params, profile);
  if (!rep.all_ok()) {
    std::string why;
    if (!rep.axle_order_ok) why += " l_r < l_f;";
    if (!rep.inertia_ok) why += " I_z l_r / l_f < m;";
    if (!rep.radius_ok) why += " road radius not bounded below;";
    throw InvalidArgument("design precondition violated:" + why);
  }

  const double m = params.mass;
  const double iz = params.yaw_inertia;
  const double lf = params.l_front;
  const double lr = params.l_rear;
  const double kin = iz * lr / lf - m;

  UncertaintyBounds out;
  out.speed = speed;
  out.omega = {cf.lo / c_hat_f, cf.hi / c_hat_f};
  out.xi = {c_hat_f / cf.hi - 1.0, c_hat_f / cf.lo - 1.0};

  // Yaw-coupled entry of theta, -(m + Iz)(1 - Chat_f / C_f) + kin (C_r - Chat_r) / C_f, over 2m.
  const Interval inv_cf{1.0 / cf.hi, 1.0 / cf.lo};
  const Interval front = -(m + iz) * Interval{1.0 - c_hat_f * inv_cf.hi, 1.0 - c_hat_f * inv_cf.lo};
  const Interval rear = kin * product(Interval{cr.lo - c_hat_r, cr.hi - c_hat_r}, inv_cf);
  const Interval yaw_part = (1.0 / (2.0 * m)) * (front + rear);
  for (int i = 0; i < 4; ++i) {
    Interval t = (k_m(i) * speed) * out.xi;
    if (i == 1 || i == 3) t = yaw_part + t;
    out.theta[static_cast<std::size_t>(i)] = (1.0 / speed) * t;
  }
  out.l_norm = 0.0;
  for (const auto& t : out.theta) out.l_norm += t.magnitude();

  const double bracket = 2.0 * cf.hi * lf + cr.hi * lr * (lr / lf - 1.0) + m * speed * speed / 2.0;
  out.delta = profile.is_straight() ? 0.0 : bracket / (2.0 * c_hat_f * rep.radius_lower);
  out.d_sigma = profile.rdot_bound(speed) / (2.0 * c_hat_f) * bracket;
  return out;
}

UncertaintyBounds uncertainty_bounds(const PriorDistribution& prior_f, const PriorDistribution& prior_r,
                                     double speed, const Vec4& k_m,
                                     const vehicle::VehicleParams& params,
                                     const vehicle::RoadProfile& profile) {
  return uncertainty_bounds(prior_f.mean, confidence_interval(prior_f), prior_r.mean,
                            confidence_interval(prior_r), speed, k_m, params, profile);
}

Mat4 nominal_closed_loop(double c_front, double c_rear, double speed, const Vec4& k_m,
                         const vehicle::VehicleParams& params) {
  const auto mats = vehicle::error_matrices(speed, c_front, c_rear, params);
  return mats.a - mats.b * k_m.transpose();
}

double speed_weight(double speed, double v_min, double v_max) {
  if (!(v_min > 0.0 && v_max > v_min)) throw InvalidArgument("need 0 < V_min < V_max");
  return (v_min * v_max / speed - v_min) / (v_max - v_min);
}

}  // namespace plk::codesign

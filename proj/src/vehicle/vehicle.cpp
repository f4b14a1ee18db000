#include "plk/vehicle.hpp"

#include <cmath>
#include <numbers>

#include "plk/error.hpp"

namespace plk::vehicle {

void VehicleParams::validate() const {
  if (!(mass > 0.0 && yaw_inertia > 0.0 && l_front > 0.0 && l_rear > 0.0)) {
    throw InvalidArgument("vehicle parameters must be positive");
  }
}

RoadProfile::RoadProfile(ConstantRoad c) : law_(c) {
  if (!(c.radius > 0.0)) throw InvalidArgument("road radius must be positive");
}

RoadProfile::RoadProfile(SinusoidalRoad s) : law_(s) {
  if (!(s.period > 0.0)) throw InvalidArgument("road period must be positive");
  if (!(s.offset - std::abs(s.amplitude) > 0.0)) {
    throw InvalidArgument("sinusoidal road radius must stay positive");
  }
}

bool RoadProfile::is_straight() const {
  const auto* c = std::get_if<ConstantRoad>(&law_);
  return c != nullptr && std::isinf(c->radius);
}

double RoadProfile::radius(double s) const {
  if (const auto* c = std::get_if<ConstantRoad>(&law_)) return c->radius;
  const auto& w = std::get<SinusoidalRoad>(law_);
  return w.amplitude * std::sin(s / w.period) + w.offset;
}

double RoadProfile::curvature(double s) const {
  if (const auto* c = std::get_if<ConstantRoad>(&law_)) {
    return std::isinf(c->radius) ? 0.0 : 1.0 / c->radius;
  }
  return 1.0 / radius(s);
}

double RoadProfile::radius_slope(double s) const {
  if (std::holds_alternative<ConstantRoad>(law_)) return 0.0;
  const auto& w = std::get<SinusoidalRoad>(law_);
  return w.amplitude / w.period * std::cos(s / w.period);
}

double RoadProfile::min_radius() const {
  if (const auto* c = std::get_if<ConstantRoad>(&law_)) return c->radius;
  const auto& w = std::get<SinusoidalRoad>(law_);
  return w.offset - std::abs(w.amplitude);
}

double RoadProfile::rdot_bound(double speed) const {
  if (std::holds_alternative<ConstantRoad>(law_)) return 0.0;
  const auto& w = std::get<SinusoidalRoad>(law_);
  constexpr int kSamples = 20000;
  const double span = 2.0 * std::numbers::pi * w.period;
  double best = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double s = span * i / kSamples;
    const double r = radius(s);
    best = std::max(best, std::abs(radius_slope(s) * speed) / (r * r));
  }
  return best;
}

RawMatrices raw_matrices(double v, double cf, double cr, const VehicleParams& p) {
  p.validate();
  if (!(v > 0.0)) throw InvalidArgument("speed must be positive");
  if (cf < 0.0 || cr < 0.0) throw InvalidArgument("cornering stiffness must be non-negative");
  const double m = p.mass;
  const double iz = p.yaw_inertia;
  const double lf = p.l_front;
  const double lr = p.l_rear;
  RawMatrices out;
  out.a.setZero();
  out.a(0, 1) = 1.0;
  out.a(1, 1) = -2.0 * (cf + cr) / (m * v);
  out.a(1, 3) = -v - 2.0 * (cf * lf - cr * lr) / (m * v);
  out.a(2, 3) = 1.0;
  out.a(3, 1) = -2.0 * (cf * lf - cr * lr) / (iz * v);
  out.a(3, 3) = -2.0 * (cf * lf * lf + cr * lr * lr) / (iz * v);
  out.b << 0.0, 2.0 * cf / m, 0.0, 2.0 * cf * lf / iz;
  return out;
}

LateralMatrices error_matrices(double v, double cf, double cr, const VehicleParams& p) {
  p.validate();
  if (!(v > 0.0)) throw InvalidArgument("speed must be positive");
  if (!(cf > 0.0 && cr > 0.0)) throw InvalidArgument("cornering stiffness must be positive");
  const double m = p.mass;
  const double iz = p.yaw_inertia;
  const double lf = p.l_front;
  const double lr = p.l_rear;
  const double moment = cf * lf - cr * lr;
  const double inertia_term = cf * lf * lf + cr * lr * lr;

  LateralMatrices out;
  out.speed = v;
  out.c_front = cf;
  out.c_rear = cr;
  out.a.setZero();
  out.a(0, 1) = 1.0;
  out.a(1, 1) = -2.0 * (cf + cr) / (m * v);
  out.a(1, 2) = 2.0 * (cf + cr) / m;
  out.a(1, 3) = 2.0 * (-cf * lf + cr * lr) / (m * v);
  out.a(2, 3) = 1.0;
  out.a(3, 1) = -2.0 * moment / (iz * v);
  out.a(3, 2) = 2.0 * moment / iz;
  out.a(3, 3) = -2.0 * inertia_term / (iz * v);
  out.b << 0.0, 2.0 * cf / m, 0.0, 2.0 * cf * lf / iz;
  out.g << 0.0, -2.0 * moment / (m * v) - v, 0.0, -2.0 * inertia_term / (iz * v);
  return out;
}

double desired_yaw_rate(const RoadProfile& profile, double s, double speed) {
  if (profile.is_straight()) return 0.0;
  const double r = profile.radius(s);
  if (!(r > 0.0)) throw InvalidArgument("road radius is not positive");
  return speed / r;
}

AssumptionReport check_assumptions(const VehicleParams& params, const RoadProfile& profile) {
  AssumptionReport rep;
  rep.axle_margin = params.l_rear - params.l_front;
  rep.axle_order_ok = rep.axle_margin >= 0.0;
  rep.inertia_margin = params.yaw_inertia * params.l_rear / params.l_front - params.mass;
  rep.inertia_ok = rep.inertia_margin >= 0.0;
  rep.radius_lower = profile.min_radius();
  rep.radius_ok = rep.radius_lower > 0.0;
  return rep;
}

namespace {

Vec4 checked(const Vec4& x) {
  if (!x.allFinite()) throw Divergence("lateral state became non-finite");
  return x;
}

}  // namespace

Vec4 integrate_step(const Vec4& x, const LateralMatrices& m, double u, double yaw_rate, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const Vec4 forcing = m.b * u + m.g * yaw_rate;
  const auto f = [&](double, const Vec4& s) -> Vec4 { return m.a * s + forcing; };
  return checked(rk4_step(f, 0.0, x, dt));
}

Vec4 integrate_step(const Vec4& x, const LateralMatrices& m, double u,
                    const std::function<double(double)>& yaw_rate, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const auto f = [&](double tau, const Vec4& s) -> Vec4 {
    return m.a * s + m.b * u + m.g * yaw_rate(tau);
  };
  return checked(rk4_step(f, t, x, dt));
}

}  // namespace plk::vehicle

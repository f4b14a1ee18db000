#pragma once

#include "plk/codesign.hpp"
#include "plk/vehicle.hpp"

namespace plk::fixture {

inline const Vec4 kPaperKm{0.7223, 2.5855, -0.6669, 0.1873};

inline vehicle::RoadProfile paper_road() { return vehicle::RoadProfile(vehicle::SinusoidalRoad{15.0, 120.0, 30.0}); }

/// Fixed-speed design result as the harness builds it for a fixed run.
inline codesign::DesignResult fixed_design(const PriorDistribution& prior, double speed, double k,
                                           const vehicle::VehicleParams& params = {}) {
  codesign::DesignResult r;
  r.c_hat_f = r.c_hat_r = prior.mean;
  r.k_m = kPaperKm;
  r.k = k;
  r.speed = speed;
  r.bounds = codesign::uncertainty_bounds(prior, prior, speed, kPaperKm, params, paper_road());
  return r;
}

/// A_m and b_m at the design point.
inline std::pair<Mat4, Vec4> nominal(const codesign::DesignResult& d, const vehicle::VehicleParams& params = {}) {
  const auto m = vehicle::error_matrices(d.speed, d.c_hat_f, d.c_hat_r, params);
  return {m.a - m.b * d.k_m.transpose(), m.b};
}

}  // namespace plk::fixture

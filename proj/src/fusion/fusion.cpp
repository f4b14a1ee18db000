#include "plk/fusion.hpp"

#include <cmath>
#include <sstream>

#include "plk/error.hpp"

namespace plk::fusion {

namespace {

Interval band(double mean, double variance) {
  const double half = 1.96 * std::sqrt(variance);
  return {mean - half, mean + half};
}

}  // namespace

PosteriorDistribution posterior_fuse(const PriorDistribution& prior, std::span<const OnboardMeasurement> readings) {
  if (!(prior.variance >= 0.0) || !std::isfinite(prior.mean)) throw InvalidArgument("prior variance must be non-negative");
  for (const auto& r : readings) {
    if (!(r.variance > 0.0) || !std::isfinite(r.value)) {
      throw InvalidArgument("measurement variance must be positive");
    }
  }
  double mean = prior.mean;
  double var = prior.variance;
  for (const auto& r : readings) {
    if (std::isinf(r.variance) || var == 0.0) continue;
    const double precision = 1.0 / var + 1.0 / r.variance;
    mean = (mean / var + r.value / r.variance) / precision;
    var = 1.0 / precision;
  }
  return {mean, var, band(mean, var)};
}

double update_filter_gain(double k_star, const PosteriorDistribution& post_f, const PosteriorDistribution& post_r,
                          const codesign::DesignResult& design, const vehicle::VehicleParams& params,
                          const vehicle::RoadProfile& profile, const GainUpdateOptions& opts) {
  if (!(k_star > 0.0)) throw InvalidArgument("current filter gain must be positive");
  if (!(opts.step > 0.0 && opts.radius >= 0.0)) throw InvalidArgument("gain search step and radius must be positive");
  const auto bounds = codesign::uncertainty_bounds(design.c_hat_f, post_f.interval, design.c_hat_r, post_r.interval,
                                                   design.speed, design.k_m, params, profile);
  const auto mats = vehicle::error_matrices(design.speed, design.c_hat_f, design.c_hat_r, params);
  const Mat4 a_m = mats.a - mats.b * design.k_m.transpose();
  const auto passes = [&](double k) {
    return k > 0.0 && codesign::check_ag_hurwitz(a_m, mats.b, k, bounds.theta, bounds.omega, opts.ag_grid, 1e-9, true).ok;
  };
  if (passes(k_star)) return k_star;
  const long n = std::lround(std::floor(opts.radius / opts.step + 1e-9));
  for (long j = 1; j <= n; ++j) {
    const double delta = static_cast<double>(j) * opts.step;
    if (passes(k_star + delta)) return k_star + delta;
    if (passes(k_star - delta)) return k_star - delta;
  }
  std::ostringstream os;
  os << "unrecoverable update: no filter gain within " << opts.radius << " of " << k_star
     << " makes A_g Hurwitz for the posterior sets";
  throw Infeasible(os.str());
}

}  // namespace plk::fusion

#pragma once

// Posterior belief over a cornering stiffness from the map prior and
// on-board readings, and the online filter-gain retune that keeps A_g
// Hurwitz for the posterior uncertainty sets.

#include <span>

#include "plk/bounds.hpp"
#include "plk/codesign.hpp"

namespace plk::fusion {

/// Gaussian posterior; `interval` uses the same 1.96 sigma rule as the prior.
struct PosteriorDistribution {
  double mean = 0.0;
  double variance = 0.0;
  Interval interval;

  PriorDistribution as_prior() const { return {mean, variance}; }
};

/// Synthetic output of the on-board stiffness estimator.
struct OnboardMeasurement {
  double value = 0.0;
  double variance = 1.0;  // > 0; +inf is an uninformative reading
};

/// Sequential conjugate updates: precisions add, the mean is precision
/// weighted. An empty list returns the prior. Throws InvalidArgument for a
/// non-positive measurement variance or a negative prior variance.
PosteriorDistribution posterior_fuse(const PriorDistribution& prior, std::span<const OnboardMeasurement> readings);

struct GainUpdateOptions {
  double step = 0.05;
  double radius = 50.0;
  int ag_grid = 5;
};

/// Keeps k* when A_g is Hurwitz over the boxes built from the posterior
/// intervals at the designed speed (A_m stays as designed); otherwise the
/// nearest passing k on the grid k* +/- j*step, larger k first on ties.
/// Throws Infeasible when nothing passes within the radius.
double update_filter_gain(double k_star, const PosteriorDistribution& post_f, const PosteriorDistribution& post_r,
                          const codesign::DesignResult& design, const vehicle::VehicleParams& params,
                          const vehicle::RoadProfile& profile, const GainUpdateOptions& opts = {});

}  // namespace plk::fusion

#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace plk {

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  /// max(|lo|, |hi|)
  double magnitude() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool contains(const Interval& o, double tol = 0.0) const {
    return o.lo >= lo - tol && o.hi <= hi + tol;
  }

  friend Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
  friend Interval operator*(double s, const Interval& a) {
    const double x = s * a.lo;
    const double y = s * a.hi;
    return {std::min(x, y), std::max(x, y)};
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Gaussian belief over a cornering stiffness (N/rad).
struct PriorDistribution {
  double mean = 0.0;
  double variance = 0.0;

  double lower() const { return mean - 1.96 * std::sqrt(variance); }
  double upper() const { return mean + 1.96 * std::sqrt(variance); }
};

/// Uncertainty sets of the adaptive-control plant at one speed.
struct UncertaintyBounds {
  Interval omega;                 // input gain w
  std::array<Interval, 4> theta;  // state-dependent uncertainty, already scaled by 1/V
  double delta = 0.0;             // |sigma| bound
  double d_sigma = 0.0;           // |sigma_dot| bound
  double l_norm = 0.0;            // max over theta of ||theta||_1
  Interval xi;                    // range of Chat_f / C_f - 1
  double speed = 0.0;
};

}  // namespace plk

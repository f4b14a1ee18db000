#include <cmath>
#include <sstream>

#include "plk/error.hpp"
#include "plk/kernels.hpp"
#include "plk/l1ac.hpp"

namespace plk::l1ac {

namespace {

struct Steps {
  long total;
  long record_every;
  long hook_every;
};

Steps plan(const ClosedLoopOptions& o) {
  if (!(o.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(o.duration > 0.0)) throw InvalidArgument("duration must be positive");
  if (!(o.record_interval >= 0.0) || !(o.hook_period >= 0.0)) {
    throw InvalidArgument("record interval and hook period must be non-negative");
  }
  if (!o.x0.allFinite()) throw InvalidArgument("initial state must be finite");
  Steps s;
  s.total = std::lround(o.duration / o.dt);
  s.record_every = std::max(1L, std::lround(o.record_interval / o.dt));
  s.hook_every = o.hook_period > 0.0 ? std::max(1L, std::lround(o.hook_period / o.dt)) : 0;
  return s;
}

void check_state(const Vec4& x, double limit, double t) {
  if (!x.allFinite() || x.norm() > limit) {
    std::ostringstream os;
    os << "closed loop diverged at t = " << t << " s (|x| = " << x.norm() << ")";
    throw Divergence(os.str());
  }
}

Metrics summarize(const std::vector<double>& x1, const std::vector<double>& x2, double max_u, long steps,
                  long violations) {
  Metrics m;
  m.max_abs_x1 = kernels::max_abs(x1);
  if (x1.size() > 1) m.max_abs_x1_after_start = kernels::max_abs(std::span<const double>(x1).subspan(1));
  m.max_abs_x2 = kernels::max_abs(x2);
  m.rms_x1 = std::sqrt(kernels::sum_squares(x1) / static_cast<double>(x1.size()));
  m.rms_x2 = std::sqrt(kernels::sum_squares(x2) / static_cast<double>(x2.size()));
  m.max_abs_u = max_u;
  m.steps = steps;
  m.projection_violations = violations;
  return m;
}

}  // namespace

ClosedLoopResult closed_loop(const vehicle::LateralMatrices& plant, L1Config cfg,
                             const vehicle::RoadProfile& profile, const ClosedLoopOptions& opts,
                             const TickHook& hook) {
  cfg.validate();
  const Steps steps = plan(opts);
  const double v = plant.speed;
  const auto yaw = [&](double t) { return vehicle::desired_yaw_rate(profile, v * t, v); };

  ClosedLoopResult out;
  std::vector<double> x1(static_cast<std::size_t>(steps.total + 1));
  std::vector<double> x2(x1.size());
  double max_u = 0.0;
  long violations = 0;

  Vec4 x = opts.x0;
  AdaptiveState st = initial_state(opts.x0);
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * opts.dt;
    if (steps.hook_every > 0 && i > 0 && i % steps.hook_every == 0 && hook) {
      hook(t, cfg);
      if (!(cfg.k > 0.0)) throw InvalidArgument("hook set a non-positive filter gain");
    }
    const double u_m = -cfg.k_m.dot(x);
    const double u = u_m + st.u_ad;
    x1[static_cast<std::size_t>(i)] = x(0);
    x2[static_cast<std::size_t>(i)] = x(2);
    max_u = std::max(max_u, std::abs(u));
    if (i % steps.record_every == 0 || i == steps.total) {
      out.trace.push_back({t, x, u_m, st.u_ad, st.w_hat, st.sigma_hat, st.theta_hat, profile.radius(v * t), cfg.k});
    }
    if (i == steps.total) break;

    const Vec4 x_hat = predictor_step(st, cfg, x, st.u_ad, opts.dt);
    const Estimates est = adaptation_step(st, cfg, x, st.u_ad, opts.dt);
    const double u_int = control_step(st, cfg, x, opts.r, opts.dt);
    x = vehicle::integrate_step(x, plant, u, yaw, t, opts.dt);
    check_state(x, opts.divergence_norm, t + opts.dt);

    st.x_hat = x_hat;
    st.w_hat = est.w_hat;
    st.theta_hat = est.theta_hat;
    st.sigma_hat = est.sigma_hat;
    st.u_int = u_int;
    st.u_ad = u_int;
    if (!estimates_in_domain(st, cfg)) ++violations;
  }
  out.metrics = summarize(x1, x2, max_u, steps.total, violations);
  out.final_config = std::move(cfg);
  out.final_state = st;
  return out;
}

MatchedUncertainty matched_uncertainty(const vehicle::LateralMatrices& plant,
                                       const vehicle::LateralMatrices& nominal, const Vec4& k_m) {
  if (!(nominal.b(1) != 0.0 && nominal.b(3) != 0.0)) throw InvalidArgument("nominal input vector is degenerate");
  // Left inverse of b_m splitting the two actuated rows evenly.
  Eigen::RowVector4d b_left = Eigen::RowVector4d::Zero();
  b_left(1) = 0.5 / nominal.b(1);
  b_left(3) = 0.5 / nominal.b(3);
  MatchedUncertainty mu;
  mu.w = plant.c_front / nominal.c_front;
  mu.theta = (b_left * (plant.a - nominal.a)).transpose() + (1.0 - mu.w) * k_m;
  mu.sigma_gain = b_left.dot(plant.g);
  return mu;
}

ClosedLoopResult reference_system(const vehicle::LateralMatrices& plant, const vehicle::LateralMatrices& nominal,
                                  const L1Config& cfg, const vehicle::RoadProfile& profile,
                                  const ClosedLoopOptions& opts) {
  cfg.validate();
  const Steps steps = plan(opts);
  const MatchedUncertainty mu = matched_uncertainty(plant, nominal, cfg.k_m);
  const double v = plant.speed;
  const auto yaw = [&](double t) { return vehicle::desired_yaw_rate(profile, v * t, v); };

  ClosedLoopResult out;
  std::vector<double> x1(static_cast<std::size_t>(steps.total + 1));
  std::vector<double> x2(x1.size());
  double max_u = 0.0;
  Vec4 x = opts.x0;
  double u_ref = 0.0;
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * opts.dt;
    const double u_m = -cfg.k_m.dot(x);
    const double u = u_m + u_ref;
    x1[static_cast<std::size_t>(i)] = x(0);
    x2[static_cast<std::size_t>(i)] = x(2);
    max_u = std::max(max_u, std::abs(u));
    if (i % steps.record_every == 0 || i == steps.total) {
      out.trace.push_back({t, x, u_m, u_ref, mu.w, mu.sigma_gain * yaw(t), mu.theta, profile.radius(v * t), cfg.k});
    }
    if (i == steps.total) break;

    const Vec4 xs = x;
    const auto f = [&](double tau, double ur) {
      return -cfg.k * (mu.w * ur + mu.theta.dot(xs) + mu.sigma_gain * yaw(tau) - cfg.k_g * opts.r);
    };
    const double k1 = f(t, u_ref);
    const double k2 = f(t + 0.5 * opts.dt, u_ref + 0.5 * opts.dt * k1);
    const double k3 = f(t + 0.5 * opts.dt, u_ref + 0.5 * opts.dt * k2);
    const double k4 = f(t + opts.dt, u_ref + opts.dt * k3);
    x = vehicle::integrate_step(x, plant, u, yaw, t, opts.dt);
    check_state(x, opts.divergence_norm, t + opts.dt);
    u_ref += opts.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.metrics = summarize(x1, x2, max_u, steps.total, 0);
  out.final_config = cfg;
  return out;
}

}  // namespace plk::l1ac

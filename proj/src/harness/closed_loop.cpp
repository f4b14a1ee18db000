#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "plk/error.hpp"
#include "plk/harness.hpp"
#include "plk/rng.hpp"

namespace plk::harness {

namespace {

Mat4 nominal_a_m(double c_hat, double speed, const Vec4& k_m, const vehicle::VehicleParams& params) {
  return codesign::nominal_closed_loop(c_hat, c_hat, speed, k_m, params);
}

double worst_norm(const Mat4& a_m, const Vec4& b_m, double k, const Interval& omega, const codesign::DesignConfig& d) {
  const int n = omega.width() > 0.0 ? std::max(2, d.omega_grid) : 1;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = n == 1 ? omega.center() : omega.lo + omega.width() * i / (n - 1);
    worst = std::max(worst, codesign::filtered_plant_l1_norm(a_m, b_m, k, w, d.norm));
  }
  return worst;
}

}  // namespace

AreaDesign design_area(const ScenarioConfig& cfg, const AreaRunConfig& run, const PriorDistribution& prior,
                       bool run_optimizer) {
  const auto& d = cfg.design;
  const auto& params = cfg.vehicle;
  const double c_hat = prior.mean;

  AreaDesign out;
  out.name = run.name;
  out.prior = prior;
  out.optimized = run.optimize;

  codesign::GainDesign gains;
  std::string p_note;
  if (cfg.k_m) {
    gains.k_m = *cfg.k_m;
    if (run.p) {
      gains.p = *run.p;
    } else {
      const Mat4 a_min = nominal_a_m(c_hat, d.v_min, gains.k_m, params);
      const Mat4 a_max = nominal_a_m(c_hat, d.v_max, gains.k_m, params);
      try {
        gains = codesign::find_common_lyapunov(a_min, a_max, cfg.gains);
        gains.k_m = *cfg.k_m;
      } catch (const Infeasible& e) {
        if (run.optimize) throw;
        // Only the fixed speed matters for the simulation itself.
        const Mat4 a_v = nominal_a_m(c_hat, run.speed, gains.k_m, params);
        gains.p = linalg::solve_lyapunov(a_v, Mat4::Identity());
        p_note = std::string("no common Lyapunov matrix over the speed range (") + e.what() +
                 "); using the single-speed solution";
      }
    }
  } else {
    gains = codesign::design_km_p(c_hat, c_hat, d.v_min, d.v_max, params, cfg.gains);
    if (run.p) gains.p = *run.p;
  }

  const auto run_program = [&] { return codesign::optimize_velocity(d, prior, prior, gains, params, cfg.road); };

  if (run.optimize) {
    out.design = run_program();
    out.optimizer = out.design;
  } else {
    auto& r = out.design;
    r.c_hat_f = c_hat;
    r.c_hat_r = c_hat;
    r.k_m = gains.k_m;
    r.p = gains.p;
    r.k = run.k;
    r.speed = run.speed;
    r.lyapunov = codesign::verify_common_lyapunov(gains.p, nominal_a_m(c_hat, d.v_min, gains.k_m, params),
                                                  nominal_a_m(c_hat, d.v_max, gains.k_m, params));
    r.bounds = codesign::uncertainty_bounds(prior, prior, run.speed, gains.k_m, params, cfg.road);
    const auto m = vehicle::error_matrices(run.speed, c_hat, c_hat, params);
    const Mat4 a_m = m.a - m.b * gains.k_m.transpose();
    r.ag = codesign::check_ag_hurwitz(a_m, m.b, run.k, r.bounds.theta, r.bounds.omega, d.ag_grid);
    r.g_norm = worst_norm(a_m, m.b, run.k, r.bounds.omega, d);
    if (run_optimizer) {
      try {
        out.optimizer = run_program();
      } catch (const Infeasible& e) {
        out.optimizer_message = e.what();
      }
    }
  }
  if (!p_note.empty()) {
    out.optimizer_message = out.optimizer_message.empty() ? p_note : p_note + "; " + out.optimizer_message;
  }
  return out;
}

AreaRunResult run_area(const ScenarioConfig& cfg, const AreaRunConfig& run, const PriorDistribution& prior,
                       std::uint64_t seed) {
  AreaRunResult out;
  out.design = design_area(cfg, run, prior, false);
  const auto& des = out.design.design;
  const auto& cl = cfg.closed_loop;

  const auto plant = vehicle::error_matrices(des.speed, run.c_true, run.c_true, cfg.vehicle);
  const auto nominal = vehicle::error_matrices(des.speed, des.c_hat_f, des.c_hat_r, cfg.vehicle);
  const Mat4 a_m = nominal.a - nominal.b * des.k_m.transpose();
  const l1ac::L1Config l1 =
      l1ac::make_config(a_m, nominal.b, des.k_m, des.p, cl.gamma, des.k, des.bounds, cl.proj_eps);

  l1ac::ClosedLoopOptions opts;
  opts.duration = cl.duration;
  opts.dt = cl.dt;
  opts.x0 = cl.x0;
  opts.record_interval = cl.record_interval;

  // Synthetic on-board estimator: truth plus Gaussian noise, fused into the
  // design prior at every hook tick.
  Rng onboard = make_rng(seed, "onboard:" + run.name);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  PriorDistribution belief = prior;
  out.posterior.push_back({0.0, belief.mean, belief.variance, des.k});
  l1ac::TickHook hook;
  if (run.fusion && cl.fusion_period > 0.0) {
    opts.hook_period = cl.fusion_period;
    hook = [&](double t, l1ac::L1Config& c) {
      const std::array<fusion::OnboardMeasurement, 1> reading{
          {{run.c_true + std::sqrt(run.measurement_variance) * std_normal(onboard), run.measurement_variance}}};
      const auto post = fusion::posterior_fuse(belief, reading);
      belief = post.as_prior();
      // No recoverable gain: keep the last k and flag the run.
      try {
        c.k = fusion::update_filter_gain(c.k, post, post, des, cfg.vehicle, cfg.road,
                                         {0.05, 50.0, cfg.design.ag_grid});
      } catch (const Infeasible&) {
        out.unrecoverable_update = true;
      }
      out.posterior.push_back({t, belief.mean, belief.variance, c.k});
    };
  }

  try {
    out.loop = l1ac::closed_loop(plant, l1, cfg.road, opts, hook);
    out.max_abs_x1_after_start = out.loop.metrics.max_abs_x1_after_start;
  } catch (const Divergence& e) {
    out.diverged = true;
    out.divergence_message = e.what();
  }
  return out;
}

}  // namespace plk::harness

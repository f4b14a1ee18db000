#include "plk/error.hpp"
#include "plk/harness.hpp"

namespace plk::harness {

std::vector<CurvePoint> run_velocity_curve(const ScenarioConfig& cfg) {
  const auto& sw = cfg.sweep;
  const auto& d = cfg.design;
  std::vector<CurvePoint> out;
  for (int i = 0; i < sw.n_points; ++i) {
    CurvePoint pt;
    pt.c_hat = sw.n_points == 1 ? sw.c_min : sw.c_min + (sw.c_max - sw.c_min) * i / (sw.n_points - 1);
    const PriorDistribution prior{pt.c_hat, sw.prior_variance};
    try {
      codesign::GainDesign gains;
      if (cfg.k_m) {
        const Mat4 a_min = codesign::nominal_closed_loop(pt.c_hat, pt.c_hat, d.v_min, *cfg.k_m, cfg.vehicle);
        const Mat4 a_max = codesign::nominal_closed_loop(pt.c_hat, pt.c_hat, d.v_max, *cfg.k_m, cfg.vehicle);
        gains = codesign::find_common_lyapunov(a_min, a_max, cfg.gains);
        gains.k_m = *cfg.k_m;
      } else {
        gains = codesign::design_km_p(pt.c_hat, pt.c_hat, d.v_min, d.v_max, cfg.vehicle, cfg.gains);
      }
      const auto r = codesign::optimize_velocity(d, prior, prior, gains, cfg.vehicle, cfg.road);
      pt.feasible = true;
      pt.v_star = r.speed;
      pt.k_star = r.k;
      pt.g_norm = r.g_norm;
    } catch (const Infeasible& e) {
      pt.message = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace plk::harness

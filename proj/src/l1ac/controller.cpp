#include <algorithm>
#include <cmath>
#include <sstream>

#include "plk/error.hpp"
#include "plk/l1ac.hpp"

namespace plk::l1ac {

void L1Config::validate() const {
  if (!(a_m.allFinite() && b_m.allFinite() && c.allFinite() && k_m.allFinite() && p.allFinite())) {
    throw InvalidArgument("controller matrices must be finite");
  }
  const double abscissa = linalg::spectral_abscissa(a_m);
  if (!(abscissa < 0.0)) {
    std::ostringstream os;
    os << "A_m is not Hurwitz (spectral abscissa " << abscissa << ")";
    throw InvalidArgument(os.str());
  }
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("P is not symmetric");
  }
  if (!(linalg::min_eigenvalue_sym(p) > 0.0)) throw InvalidArgument("P is not positive definite");
  MatrixXd form = a_m.transpose() * p + p * a_m;
  linalg::symmetrize(form);
  const double top = linalg::max_eigenvalue_sym(form);
  if (!(top < 0.0)) {
    std::ostringstream os;
    os << "A_m^T P + P A_m is not negative definite (largest eigenvalue " << top << ")";
    throw InvalidArgument(os.str());
  }
  if (!(gamma > 0.0)) throw InvalidArgument("adaptation gain must be positive");
  if (!(k > 0.0)) throw InvalidArgument("filter gain k must be positive");
  if (!(proj_eps >= 0.0)) throw InvalidArgument("projection margin must be non-negative");
  if (!std::isfinite(k_g)) throw InvalidArgument("k_g is not finite");
  if (!(bounds.omega.lo <= bounds.omega.hi) || !(bounds.delta >= 0.0)) {
    throw InvalidArgument("uncertainty bounds are empty");
  }
  for (const auto& t : bounds.theta) {
    if (!(t.lo <= t.hi)) throw InvalidArgument("theta bounds are empty");
  }
}

L1Config make_config(const Mat4& a_m, const Vec4& b_m, const Vec4& k_m, const Mat4& p, double gamma, double k,
                     const UncertaintyBounds& bounds, double proj_eps, const Vec4& c) {
  L1Config cfg;
  cfg.a_m = a_m;
  cfg.b_m = b_m;
  cfg.c = c;
  cfg.k_m = k_m;
  cfg.p = p;
  cfg.gamma = gamma;
  cfg.k = k;
  cfg.bounds = bounds;
  cfg.proj_eps = proj_eps;
  const double dc = c.dot(a_m.partialPivLu().solve(b_m));
  if (!(std::abs(dc) > 0.0) || !std::isfinite(dc)) throw InvalidArgument("c^T A_m^-1 b_m is zero");
  cfg.k_g = -1.0 / dc;
  cfg.validate();
  return cfg;
}

AdaptiveState initial_state(const Vec4& x0) {
  AdaptiveState s;
  s.x_hat = x0;
  return s;
}

Interval inflated(const Interval& set, double eps) {
  const double pad = eps * set.width();
  return {set.lo - pad, set.hi + pad};
}

double projection(double estimate, double direction, const Interval& set, double eps) {
  const Interval dom = inflated(set, eps);
  const double slack = 1e-12 * std::max({1.0, std::abs(dom.lo), std::abs(dom.hi)});
  if (!dom.contains(estimate, slack)) {
    std::ostringstream os;
    os << "projection-domain error: estimate " << estimate << " outside [" << dom.lo << ", " << dom.hi << "]";
    throw InvalidArgument(os.str());
  }
  const double r0 = 0.5 * set.width();
  if (r0 <= 0.0) return 0.0;
  const double offset = estimate - set.center();
  const double r = std::abs(offset);
  if (r <= r0 || offset * direction <= 0.0) return direction;
  const double r1 = r0 + eps * set.width();
  const double f = std::min(1.0, (r * r - r0 * r0) / (r1 * r1 - r0 * r0));
  return direction * (1.0 - f);
}

Vec4 projection(const Vec4& estimate, const Vec4& direction, const std::array<Interval, 4>& box, double eps) {
  Vec4 out;
  for (int i = 0; i < 4; ++i) {
    out(i) = projection(estimate(i), direction(i), box[static_cast<std::size_t>(i)], eps);
  }
  return out;
}

double lumped_estimate(const AdaptiveState& s, const Vec4& x) {
  return s.w_hat * s.u_ad + s.theta_hat.dot(x) + s.sigma_hat;
}

Vec4 predictor_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const Vec4 forcing = cfg.b_m * (s.w_hat * u_ad + s.theta_hat.dot(x) + s.sigma_hat);
  const auto f = [&](double, const Vec4& xh) -> Vec4 { return cfg.a_m * xh + forcing; };
  const Vec4 next = vehicle::rk4_step(f, 0.0, s.x_hat, dt);
  if (!next.allFinite()) throw Divergence("state predictor became non-finite");
  return next;
}

namespace {

Interval sigma_set(const L1Config& cfg) { return {-cfg.bounds.delta, cfg.bounds.delta}; }

double clip(double v, const Interval& set, double eps) {
  const Interval dom = inflated(set, eps);
  return std::clamp(v, dom.lo, dom.hi);
}

struct EstVec {
  double w;
  Vec4 th;
  double sg;
};

}  // namespace

Estimates adaptation_rates(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad) {
  const double drive = (s.x_hat - x).dot(cfg.p * cfg.b_m);
  Estimates r;
  r.w_hat = cfg.gamma * projection(s.w_hat, -drive * u_ad, cfg.bounds.omega, cfg.proj_eps);
  r.theta_hat = cfg.gamma * projection(s.theta_hat, Vec4(-drive * x), cfg.bounds.theta, cfg.proj_eps);
  r.sigma_hat = cfg.gamma * projection(s.sigma_hat, -drive, sigma_set(cfg), cfg.proj_eps);
  return r;
}

Estimates adaptation_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double u_ad, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double drive = (s.x_hat - x).dot(cfg.p * cfg.b_m);
  const double eps = cfg.proj_eps;
  const Interval sg = sigma_set(cfg);
  const auto clamp_all = [&](EstVec e) {
    e.w = clip(e.w, cfg.bounds.omega, eps);
    for (int i = 0; i < 4; ++i) e.th(i) = clip(e.th(i), cfg.bounds.theta[static_cast<std::size_t>(i)], eps);
    e.sg = clip(e.sg, sg, eps);
    return e;
  };
  const auto rate = [&](const EstVec& e) {
    EstVec r;
    r.w = cfg.gamma * projection(e.w, -drive * u_ad, cfg.bounds.omega, eps);
    r.th = cfg.gamma * projection(e.th, Vec4(-drive * x), cfg.bounds.theta, eps);
    r.sg = cfg.gamma * projection(e.sg, -drive, sg, eps);
    return r;
  };
  const auto axpy = [&](const EstVec& e, double h, const EstVec& d) {
    return clamp_all({e.w + h * d.w, e.th + h * d.th, e.sg + h * d.sg});
  };
  const EstVec e0{s.w_hat, s.theta_hat, s.sigma_hat};
  const EstVec k1 = rate(e0);
  const EstVec k2 = rate(axpy(e0, 0.5 * dt, k1));
  const EstVec k3 = rate(axpy(e0, 0.5 * dt, k2));
  const EstVec k4 = rate(axpy(e0, dt, k3));
  const EstVec out = clamp_all({e0.w + dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
                                e0.th + dt / 6.0 * (k1.th + 2.0 * k2.th + 2.0 * k3.th + k4.th),
                                e0.sg + dt / 6.0 * (k1.sg + 2.0 * k2.sg + 2.0 * k3.sg + k4.sg)});
  if (!(std::isfinite(out.w) && out.th.allFinite() && std::isfinite(out.sg))) {
    throw Divergence("adaptive estimates became non-finite");
  }
  return {out.w, out.th, out.sg};
}

double control_step(const AdaptiveState& s, const L1Config& cfg, const Vec4& x, double r, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double bias = s.theta_hat.dot(x) + s.sigma_hat - cfg.k_g * r;
  const auto f = [&](double u) { return -cfg.k * (s.w_hat * u + bias); };
  const double u0 = s.u_int;
  const double k1 = f(u0);
  const double k2 = f(u0 + 0.5 * dt * k1);
  const double k3 = f(u0 + 0.5 * dt * k2);
  const double k4 = f(u0 + dt * k3);
  const double next = u0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!std::isfinite(next)) throw Divergence("adaptive input became non-finite");
  return next;
}

bool estimates_in_domain(const AdaptiveState& s, const L1Config& cfg) {
  const auto inside = [&](double v, const Interval& set) {
    const Interval dom = inflated(set, cfg.proj_eps);
    return dom.contains(v, 1e-12 * std::max({1.0, std::abs(dom.lo), std::abs(dom.hi)}));
  };
  if (!inside(s.w_hat, cfg.bounds.omega) || !inside(s.sigma_hat, sigma_set(cfg))) return false;
  for (int i = 0; i < 4; ++i) {
    if (!inside(s.theta_hat(i), cfg.bounds.theta[static_cast<std::size_t>(i)])) return false;
  }
  return true;
}

}  // namespace plk::l1ac

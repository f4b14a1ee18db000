#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "design_fixtures.hpp"
#include "plk/codesign.hpp"
#include "plk/error.hpp"
#include "plk/rng.hpp"

namespace {

using namespace plk;
using namespace plk::codesign;
using fixture::kPaperKm;
using fixture::paper_road;

const vehicle::VehicleParams kCar{};

// ----------------------------------------------------------- intervals

TEST(ConfidenceInterval, PaperPriors) {
  const auto a = confidence_interval({51826.0, 1413.0});
  EXPECT_NEAR(a.lo, 51752.3, 0.1);
  EXPECT_NEAR(a.hi, 51899.7, 0.1);
  const auto b = confidence_interval({23240.0, 1937.0});
  EXPECT_NEAR(b.lo, 23153.7, 0.1);
  EXPECT_NEAR(b.hi, 23326.3, 0.1);
}

TEST(ConfidenceInterval, DegenerateAndInvalid) {
  const auto a = confidence_interval({40000.0, 0.0});
  EXPECT_EQ(a.lo, 40000.0);
  EXPECT_EQ(a.hi, 40000.0);
  EXPECT_THROW(confidence_interval({10.0, 100.0}), InvalidArgument);
  EXPECT_THROW(confidence_interval({10.0, -1.0}), InvalidArgument);
}

// --------------------------------------------------------------- bounds

TEST(UncertaintyBounds, DegeneratePriorCollapses) {
  const PriorDistribution p{50000.0, 0.0};
  const double v = 18.0;
  const auto b = uncertainty_bounds(p, p, v, kPaperKm, kCar, paper_road());
  EXPECT_EQ(b.omega, (Interval{1.0, 1.0}));
  EXPECT_EQ(b.xi, (Interval{0.0, 0.0}));
  for (const auto& t : b.theta) {
    EXPECT_NEAR(t.lo, 0.0, 1e-15);
    EXPECT_NEAR(t.hi, 0.0, 1e-15);
  }
  EXPECT_EQ(b.l_norm, 0.0);
  const double lf = kCar.l_front, lr = kCar.l_rear;
  const double want = (2.0 * 50000.0 * lf + 50000.0 * lr * (lr / lf - 1.0) + kCar.mass * v * v / 2.0) /
                      (2.0 * 50000.0 * 15.0);
  EXPECT_NEAR(b.delta, want, 1e-12);
}

TEST(UncertaintyBounds, OmegaBracketsOneAndNormSums) {
  const auto b = uncertainty_bounds({23240.0, 1937.0}, {23240.0, 1937.0}, 12.96, kPaperKm, kCar, paper_road());
  EXPECT_LT(b.omega.lo, 1.0);
  EXPECT_GT(b.omega.hi, 1.0);
  double l = 0.0;
  for (const auto& t : b.theta) l += t.magnitude();
  EXPECT_DOUBLE_EQ(b.l_norm, l);
  EXPECT_GE(b.delta, 0.0);
  EXPECT_GE(b.d_sigma, 0.0);
}

TEST(UncertaintyBounds, StraightRoadHasNoDisturbance) {
  const auto b = uncertainty_bounds({50000.0, 1000.0}, {50000.0, 1000.0}, 20.0, kPaperKm, kCar,
                                    vehicle::RoadProfile(vehicle::ConstantRoad{}));
  EXPECT_EQ(b.delta, 0.0);
  EXPECT_EQ(b.d_sigma, 0.0);
}

TEST(UncertaintyBounds, DeltaGrowsWithSpeed) {
  const PriorDistribution p{40000.0, 2000.0};
  double last = -1.0;
  for (double v = 10.0; v <= 25.0; v += 1.0) {
    const double d = uncertainty_bounds(p, p, v, kPaperKm, kCar, paper_road()).delta;
    EXPECT_GT(d, last);
    last = d;
  }
}

TEST(UncertaintyBounds, PreconditionViolation) {
  vehicle::VehicleParams p = kCar;
  p.l_front = 2.0;
  p.l_rear = 1.0;
  EXPECT_THROW(uncertainty_bounds({50000.0, 100.0}, {50000.0, 100.0}, 10.0, kPaperKm, p, paper_road()),
               InvalidArgument);
  EXPECT_THROW(uncertainty_bounds({50000.0, 100.0}, {50000.0, 100.0}, 0.0, kPaperKm, kCar, paper_road()),
               InvalidArgument);
}

// Realized uncertainty of a sampled truth, written out from the proof formulas.
TEST(UncertaintyBounds, SampledTruthsContained) {
  Rng rng(11);
  const double m = kCar.mass, iz = kCar.yaw_inertia, lf = kCar.l_front, lr = kCar.l_rear;
  const auto road = paper_road();
  for (const PriorDistribution prior : {PriorDistribution{51826.0, 1413.0}, PriorDistribution{23240.0, 1937.0}}) {
    const Interval ci = confidence_interval(prior);
    std::uniform_real_distribution<double> pick(ci.lo, ci.hi);
    std::uniform_real_distribution<double> arc(0.0, 2000.0);
    for (double v : {10.0, 12.96, 18.61, 25.0}) {
      const auto b = uncertainty_bounds(prior, prior, v, kPaperKm, kCar, road);
      const double ch = prior.mean;
      for (int i = 0; i < 1000; ++i) {
        const double cf = pick(rng), cr = pick(rng);
        const double w = cf / ch;
        ASSERT_TRUE(b.omega.contains(w, 1e-12));
        const double yaw = (-(m + iz) * (cf - ch) / (m * ch) + (iz * lr / lf - m) * (cr - ch) / (m * ch)) /
                           (2.0 * v * w);
        for (int j = 0; j < 4; ++j) {
          const double theta = (j == 1 || j == 3 ? yaw : 0.0) + kPaperKm(j) * (1.0 / w - 1.0);
          ASSERT_TRUE(b.theta[static_cast<std::size_t>(j)].contains(theta, 1e-12)) << j;
        }
        const double s = arc(rng);
        const double r = road.radius(s);
        const double bracket = 2.0 * cf * lf + cr * lr * (lr / lf - 1.0) + m * v * v / 2.0;
        const double sigma = -bracket / (2.0 * ch * r);
        const double sigma_dot = road.radius_slope(s) * v / (2.0 * ch * r * r) * bracket;
        ASSERT_LE(std::abs(sigma), b.delta * (1.0 + 1e-12));
        ASSERT_LE(std::abs(sigma_dot), b.d_sigma * (1.0 + 1e-9));
      }
    }
  }
}

// ------------------------------------------------------------ Lyapunov

TEST(Lyapunov, IdentityCertificate) {
  const Mat4 a = -Mat4::Identity();
  const auto c = verify_common_lyapunov(Mat4::Identity(), a, a);
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(c.residual_at_min, -2.0, 1e-12);
  EXPECT_NEAR(c.residual_at_max, -2.0, 1e-12);
}

TEST(Lyapunov, ScalarSurrogate) {
  const Mat4 a_min = -Mat4::Identity();       // -1/V at V = 1
  const Mat4 a_max = -0.5 * Mat4::Identity();  // at V = 2
  EXPECT_TRUE(verify_common_lyapunov(Mat4::Identity(), a_min, a_max).ok);
}

TEST(Lyapunov, RejectsIndefiniteP) {
  Mat4 p = Mat4::Identity();
  p(3, 3) = -1.0;
  EXPECT_FALSE(verify_common_lyapunov(p, -Mat4::Identity(), -Mat4::Identity()).ok);
}

TEST(Lyapunov, UnstableEndpointIsInfeasible) {
  Mat4 a_max = -Mat4::Identity();
  a_max(0, 0) = 0.5;
  EXPECT_THROW(find_common_lyapunov(-Mat4::Identity(), a_max), Infeasible);
}

TEST(Lyapunov, SpeedWeightIdentity) {
  Rng rng(3);
  std::uniform_real_distribution<double> v(10.0, 25.0);
  const double c = 51826.0;
  const Mat4 a_lo = nominal_closed_loop(c, c, 10.0, kPaperKm, kCar);
  const Mat4 a_hi = nominal_closed_loop(c, c, 25.0, kPaperKm, kCar);
  EXPECT_NEAR(speed_weight(10.0, 10.0, 25.0), 1.0, 1e-15);
  EXPECT_NEAR(speed_weight(25.0, 10.0, 25.0), 0.0, 1e-15);
  for (int i = 0; i < 200; ++i) {
    const double speed = v(rng);
    const double alpha = speed_weight(speed, 10.0, 25.0);
    const Mat4 mix = alpha * a_lo + (1.0 - alpha) * a_hi;
    ASSERT_LT((nominal_closed_loop(c, c, speed, kPaperKm, kCar) - mix).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Lyapunov, PaperGainHasCommonCertificate) {
  const double c = 51826.0;
  const Mat4 a_lo = nominal_closed_loop(c, c, 10.0, kPaperKm, kCar);
  const Mat4 a_hi = nominal_closed_loop(c, c, 25.0, kPaperKm, kCar);
  const auto g = find_common_lyapunov(a_lo, a_hi);
  EXPECT_TRUE(g.certificate.ok);
  EXPECT_TRUE(verify_common_lyapunov(g.p, a_lo, a_hi).ok);
  Rng rng(4);
  std::uniform_real_distribution<double> v(10.0, 25.0);
  for (int i = 0; i < 100; ++i) {
    const Mat4 a = nominal_closed_loop(c, c, v(rng), kPaperKm, kCar);
    ASSERT_LT(linalg::max_eigenvalue_sym(a.transpose() * g.p + g.p * a), 0.0);
  }
}

TEST(Lyapunov, PolePlacementHitsTargets) {
  const auto m = vehicle::error_matrices(17.5, 40000.0, 40000.0, kCar);
  const Vec4 k = place_poles(m.a, m.b, {-2.0, -2.5, -3.0, -3.5});
  Eigen::EigenSolver<Mat4> es(m.a - m.b * k.transpose());
  std::vector<double> re;
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(es.eigenvalues()(i).imag(), 0.0, 1e-6);
    re.push_back(es.eigenvalues()(i).real());
  }
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -3.5, 1e-6);
  EXPECT_NEAR(re[3], -2.0, 1e-6);
  EXPECT_THROW(place_poles(Mat4::Identity(), Vec4::UnitX(), {-1.0, -2.0, -3.0, -4.0}), InvalidArgument);
}

TEST(Lyapunov, DesignKmPEndpointsCertified) {
  const auto g = design_km_p(30000.0, 30000.0, 10.0, 25.0, kCar);
  EXPECT_TRUE(g.certificate.ok);
  EXPECT_TRUE(verify_common_lyapunov(g.p, nominal_closed_loop(30000.0, 30000.0, 10.0, g.k_m, kCar),
                                     nominal_closed_loop(30000.0, 30000.0, 25.0, g.k_m, kCar))
                  .ok);
}

// -------------------------------------------------------------- L1 norm

double l1(const MatrixXd& a, const VectorXd& b, const MatrixXd& c) { return impulse_l1_norm(a, b, c); }

TEST(L1Norm, FirstOrderCases) {
  EXPECT_NEAR(l1(MatrixXd::Constant(1, 1, -1.0), VectorXd::Ones(1), MatrixXd::Ones(1, 1)), 1.0, 1e-3);
  EXPECT_NEAR(l1(MatrixXd::Constant(1, 1, -2.0), VectorXd::Constant(1, 3.0), MatrixXd::Ones(1, 1)), 1.5, 1e-3);
}

TEST(L1Norm, OscillatingResponse) {
  MatrixXd a(2, 2);
  a << 0.0, 1.0, -10.0, -2.0;
  const VectorXd b = (VectorXd(2) << 0.0, 1.0).finished();
  const MatrixXd c = (MatrixXd(1, 2) << 1.0, 1.0).finished();
  double oracle = 0.0;
  const double h = 1e-5;
  for (long i = 0; i < 4'000'000; ++i) {
    const double t0 = i * h, t1 = t0 + h;
    oracle += 0.5 * h * (std::abs(std::exp(-t0) * std::cos(3.0 * t0)) + std::abs(std::exp(-t1) * std::cos(3.0 * t1)));
  }
  EXPECT_NEAR(l1(a, b, c), oracle, 1e-3);
}

TEST(L1Norm, UnstableRealizationDiverges) {
  EXPECT_THROW(l1(MatrixXd::Constant(1, 1, 0.1), VectorXd::Ones(1), MatrixXd::Ones(1, 1)), Divergence);
  EXPECT_THROW(filtered_plant_l1_norm(-Mat4::Identity(), Vec4::Ones(), 0.0, 1.0), InvalidArgument);
}

TEST(L1Norm, FilteredPlantDecreasesWithK) {
  const auto d = fixture::fixed_design({51826.0, 1413.0}, 18.61, 10.0);
  const auto [a_m, b_m] = fixture::nominal(d);
  double last = std::numeric_limits<double>::infinity();
  for (double k : {1.0, 2.5, 5.0, 7.5, 10.0, 20.0}) {
    const double g = filtered_plant_l1_norm(a_m, b_m, k, 1.0);
    EXPECT_LT(g, last) << k;
    last = g;
  }
}

// ------------------------------------------------------------------ A_g

TEST(AgCheck, DecoupledSpectrumPasses) {
  const std::array<Interval, 4> zero{};
  const auto r = check_ag_hurwitz(-Mat4::Identity(), Vec4::Ones(), 5.0, zero, {1.0, 1.0});
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.worst_abscissa, -1.0, 1e-9);
  const auto a = ag_matrix(-Mat4::Identity(), Vec4::Ones(), 5.0, Vec4::Zero(), 1.0);
  EXPECT_EQ(a(4, 4), -5.0);
  EXPECT_EQ((a.block<1, 4>(4, 0).norm()), 0.0);
}

TEST(AgCheck, ZeroFilterGainFails) {
  const std::array<Interval, 4> zero{};
  EXPECT_FALSE(check_ag_hurwitz(-Mat4::Identity(), Vec4::Ones(), 0.0, zero, {1.0, 1.0}).ok);
}

TEST(AgCheck, SnowDesignPasses) {
  const auto d = fixture::fixed_design({23240.0, 1937.0}, 12.96, 10.0);
  const auto [a_m, b_m] = fixture::nominal(d);
  const auto r = check_ag_hurwitz(a_m, b_m, 10.0, d.bounds.theta, d.bounds.omega, 5);
  EXPECT_TRUE(r.ok);
  EXPECT_LT(r.worst_abscissa, 0.0);
  EXPECT_EQ(r.evaluated, 3125);
  const auto early = check_ag_hurwitz(a_m, b_m, 10.0, d.bounds.theta, d.bounds.omega, 5, 1e-9, true);
  EXPECT_TRUE(early.ok);
}

// ------------------------------------------------------------- optimizer

DesignConfig quick_config() {
  DesignConfig c;
  c.v_resolution = 0.05;
  c.omega_grid = 3;
  c.ag_grid = 3;
  c.norm.dt = 2e-3;
  return c;
}

TEST(Optimizer, ResultSatisfiesConstraintsOnDenserGrid) {
  const auto cfg = quick_config();
  const PriorDistribution prior{23240.0, 1937.0};
  const double c = prior.mean;
  const auto gains = find_common_lyapunov(nominal_closed_loop(c, c, cfg.v_min, kPaperKm, kCar),
                                          nominal_closed_loop(c, c, cfg.v_max, kPaperKm, kCar));
  GainDesign g = gains;
  g.k_m = kPaperKm;
  const auto r = optimize_velocity(cfg, prior, prior, g, kCar, paper_road());
  EXPECT_GE(r.speed, cfg.v_min);
  EXPECT_LE(r.speed, cfg.v_max);
  EXPECT_LE(r.k, cfg.k_bar);
  EXPECT_LE(r.g_norm, cfg.lambda_gp);
  EXPECT_TRUE(r.lyapunov.ok);
  EXPECT_TRUE(r.ag.ok);

  const auto m = vehicle::error_matrices(r.speed, c, c, kCar);
  const Mat4 a_m = m.a - m.b * r.k_m.transpose();
  L1NormOptions fine;
  fine.dt = 2e-4;
  const int dense = 10 * cfg.omega_grid;
  for (int i = 0; i < dense; ++i) {
    const double w = r.bounds.omega.lo + r.bounds.omega.width() * i / (dense - 1);
    EXPECT_LE(filtered_plant_l1_norm(a_m, m.b, r.k, w, fine), cfg.lambda_gp * (1.0 + 1e-3)) << w;
  }
  EXPECT_TRUE(check_ag_hurwitz(a_m, m.b, r.k, r.bounds.theta, r.bounds.omega, 7).ok);

  // The next speed step up must fail, otherwise the search stopped early.
  if (r.speed + cfg.v_resolution <= cfg.v_max) {
    EXPECT_FALSE(evaluate_speed(cfg, prior, prior, g, r.speed + cfg.v_resolution, kCar, paper_road()).feasible);
  }
}

TEST(Optimizer, TightNormBoundIsInfeasible) {
  auto cfg = quick_config();
  cfg.lambda_gp = 1e-4;
  const PriorDistribution prior{23240.0, 1937.0};
  GainDesign g;
  g.k_m = kPaperKm;
  g.p = find_common_lyapunov(nominal_closed_loop(23240.0, 23240.0, 10.0, kPaperKm, kCar),
                             nominal_closed_loop(23240.0, 23240.0, 25.0, kPaperKm, kCar))
            .p;
  EXPECT_THROW(optimize_velocity(cfg, prior, prior, g, kCar, paper_road()), Infeasible);
}

}  // namespace

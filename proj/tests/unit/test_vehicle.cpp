#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "plk/error.hpp"
#include "plk/rng.hpp"
#include "plk/vehicle.hpp"

namespace {

using namespace plk;
using namespace plk::vehicle;

const VehicleParams kCar{};

TEST(RawMatrices, ZeroStiffnessLeavesKinematics) {
  const auto r = raw_matrices(20.0, 0.0, 0.0, kCar);
  EXPECT_EQ(r.a(0, 1), 1.0);
  EXPECT_EQ(r.a(2, 3), 1.0);
  EXPECT_EQ(r.a(1, 3), -20.0);
  EXPECT_EQ(r.a(1, 1), 0.0);
  EXPECT_EQ(r.a(3, 3), 0.0);
  EXPECT_EQ(r.b.norm(), 0.0);
}

TEST(RawMatrices, DryRoadEntries) {
  const auto r = raw_matrices(18.61, 51867.0, 51867.0, kCar);
  EXPECT_NEAR(r.a(1, 1), -7.087, 1e-3);
  EXPECT_NEAR(r.b(1), 65.95, 1e-2);
  EXPECT_THROW(raw_matrices(0.0, 1.0, 1.0, kCar), InvalidArgument);
  EXPECT_THROW(raw_matrices(10.0, -1.0, 1.0, kCar), InvalidArgument);
}

TEST(ErrorMatrices, SnowAndDryEntries) {
  const auto snow = error_matrices(12.96, 23214.0, 23214.0, kCar);
  EXPECT_NEAR(snow.a(1, 2), 59.03, 1e-2);
  const auto dry = error_matrices(18.61, 51867.0, 51867.0, kCar);
  const double moment = 51867.0 * (1.1 - 1.58);
  EXPECT_NEAR(dry.g(1), -2.0 * moment / (1573.0 * 18.61) - 18.61, 1e-12);
  EXPECT_NEAR(dry.g(1), -16.909, 1e-3);
  EXPECT_THROW(error_matrices(10.0, 0.0, 1.0, kCar), InvalidArgument);
}

TEST(ErrorMatrices, SymmetricAxlesCancelMoments) {
  VehicleParams p = kCar;
  p.l_front = p.l_rear = 1.3;
  const auto m = error_matrices(15.0, 40000.0, 40000.0, p);
  EXPECT_NEAR(m.a(1, 3), 0.0, 1e-12);
  EXPECT_NEAR(m.a(3, 1), 0.0, 1e-12);
}

TEST(ErrorMatrices, StructureOverDomain) {
  Rng rng(5);
  std::uniform_real_distribution<double> v(1.0, 40.0), c(5000.0, 150000.0);
  for (int i = 0; i < 500; ++i) {
    const double speed = v(rng), cf = c(rng), cr = c(rng);
    const auto e = error_matrices(speed, cf, cr, kCar);
    const auto r = raw_matrices(speed, cf, cr, kCar);
    ASSERT_EQ(e.b, r.b);
    for (int row : {0, 2}) {
      for (int col = 0; col < 4; ++col) {
        const double want = (col == row + 1) ? 1.0 : 0.0;
        ASSERT_EQ(e.a(row, col), want);
      }
      ASSERT_EQ(e.b(row), 0.0);
      ASSERT_EQ(e.g(row), 0.0);
    }
    ASSERT_EQ(e.a(1, 0), 0.0);
    ASSERT_EQ(e.a(3, 0), 0.0);
    ASSERT_NEAR(e.a(1, 2), -speed * e.a(1, 1), 1e-9 * std::abs(e.a(1, 2)));
    ASSERT_NEAR(e.a(3, 2), -speed * e.a(3, 1), 1e-9 * (1.0 + std::abs(e.a(3, 2))));
    ASSERT_GT(e.b(1), 0.0);
    ASSERT_LT(e.a(3, 3), 0.0);
  }
}

TEST(Road, DesiredYawRate) {
  const RoadProfile road(SinusoidalRoad{15.0, 120.0, 30.0});
  EXPECT_DOUBLE_EQ(road.radius(0.0), 30.0);
  EXPECT_NEAR(desired_yaw_rate(road, 0.0, 18.0), 18.0 / 30.0, 1e-15);
  const double peak = 120.0 * std::numbers::pi / 2.0;
  EXPECT_NEAR(road.radius(peak), 45.0, 1e-12);
  EXPECT_NEAR(desired_yaw_rate(road, peak, 18.0), 0.4, 1e-12);
  EXPECT_EQ(desired_yaw_rate(RoadProfile(ConstantRoad{}), 10.0, 18.0), 0.0);
  EXPECT_EQ(RoadProfile(ConstantRoad{50.0}).radius_slope(3.0), 0.0);
}

TEST(Road, InvalidProfiles) {
  EXPECT_THROW(RoadProfile(SinusoidalRoad{30.0, 120.0, 30.0}), InvalidArgument);
  EXPECT_THROW(RoadProfile(ConstantRoad{-1.0}), InvalidArgument);
  EXPECT_THROW(RoadProfile(SinusoidalRoad{1.0, 0.0, 30.0}), InvalidArgument);
}

TEST(Road, RateBoundDominatesSamples) {
  const RoadProfile road(SinusoidalRoad{15.0, 120.0, 30.0});
  const double bound = road.rdot_bound(20.0);
  Rng rng(9);
  std::uniform_real_distribution<double> s(0.0, 2000.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = s(rng);
    const double r = road.radius(x);
    ASSERT_LE(std::abs(road.radius_slope(x) * 20.0) / (r * r), bound * (1.0 + 1e-6));
  }
}

TEST(Assumptions, PaperCarPasses) {
  const auto rep = check_assumptions(kCar, RoadProfile(SinusoidalRoad{}));
  EXPECT_TRUE(rep.all_ok());
  EXPECT_NEAR(rep.inertia_margin, 2553.0, 1.0);
  EXPECT_DOUBLE_EQ(rep.radius_lower, 15.0);
}

TEST(Assumptions, AxleOrderViolation) {
  VehicleParams p = kCar;
  p.l_front = 2.0;
  p.l_rear = 1.0;
  const auto rep = check_assumptions(p, RoadProfile(SinusoidalRoad{}));
  EXPECT_FALSE(rep.axle_order_ok);
  EXPECT_FALSE(rep.all_ok());
}

TEST(Integrator, EquilibriumStaysPut) {
  const auto m = error_matrices(15.0, 50000.0, 50000.0, kCar);
  EXPECT_EQ(integrate_step(Vec4::Zero(), m, 0.0, 0.0, 1e-3), Vec4::Zero());
  EXPECT_THROW(integrate_step(Vec4::Zero(), m, 0.0, 0.0, 0.0), InvalidArgument);
}

TEST(Integrator, ScalarDecayOneStep) {
  const auto f = [](double, const Vec4& x) -> Vec4 { return -x; };
  const Vec4 x = rk4_step(f, 0.0, Vec4::Ones(), 0.1);
  EXPECT_NEAR(x(0), std::exp(-0.1), 1e-7);
}

TEST(Integrator, LocalErrorIsFifthOrder) {
  const auto f = [](double, const Vec4& x) -> Vec4 { return -x; };
  const double e1 = std::abs(rk4_step(f, 0.0, Vec4::Ones(), 0.2)(0) - std::exp(-0.2));
  const double e2 = std::abs(rk4_step(f, 0.0, Vec4::Ones(), 0.1)(0) - std::exp(-0.1));
  EXPECT_NEAR(std::log2(e1 / e2), 5.0, 0.2);
}

TEST(Integrator, GlobalErrorIsFourthOrder) {
  const auto m = error_matrices(15.0, 50000.0, 50000.0, kCar);
  const Vec4 x0(0.5, 0.0, 0.05, 0.0);
  const Mat4 a = m.a - m.b * Vec4(0.7223, 2.5855, -0.6669, 0.1873).transpose();
  const Vec4 exact = linalg::expm(a) * x0;
  LateralMatrices closed = m;
  closed.a = a;
  std::vector<double> errs;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    Vec4 x = x0;
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) x = integrate_step(x, closed, 0.0, 0.0, dt);
    errs.push_back((x - exact).norm());
  }
  EXPECT_NEAR(std::log2(errs[0] / errs[1]), 4.0, 0.3);
  EXPECT_NEAR(std::log2(errs[1] / errs[2]), 4.0, 0.3);
}

TEST(Integrator, TimeVaryingYawRate) {
  const auto m = error_matrices(15.0, 50000.0, 50000.0, kCar);
  const Vec4 held = integrate_step(Vec4::Zero(), m, 0.0, 0.5, 1e-3);
  const Vec4 varying = integrate_step(Vec4::Zero(), m, 0.0, [](double) { return 0.5; }, 2.0, 1e-3);
  EXPECT_LT((held - varying).norm(), 1e-15);
}

}  // namespace

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "design_fixtures.hpp"
#include "plk/error.hpp"
#include "plk/fusion.hpp"
#include "plk/rng.hpp"

namespace {

using namespace plk;
using namespace plk::fusion;

const vehicle::VehicleParams kCar{};

PosteriorDistribution fuse(const PriorDistribution& p, std::initializer_list<OnboardMeasurement> r) {
  return posterior_fuse(p, std::span<const OnboardMeasurement>(r.begin(), r.size()));
}

TEST(Fuse, EqualWeights) {
  const auto p = fuse({50000.0, 2000.0}, {{50000.0, 2000.0}});
  EXPECT_DOUBLE_EQ(p.mean, 50000.0);
  EXPECT_DOUBLE_EQ(p.variance, 1000.0);
  EXPECT_NEAR(p.interval.lo, 50000.0 - 1.96 * std::sqrt(1000.0), 1e-9);
}

TEST(Fuse, PrecisionWeightedMean) {
  const auto p = fuse({50000.0, 2000.0}, {{48000.0, 1000.0}});
  EXPECT_NEAR(p.mean, 48666.6667, 1e-3);
  EXPECT_NEAR(p.variance, 666.6667, 1e-3);
}

TEST(Fuse, UninformativeAndEmpty) {
  const auto p = fuse({50000.0, 2000.0}, {{1.0, std::numeric_limits<double>::infinity()}});
  EXPECT_EQ(p.mean, 50000.0);
  EXPECT_EQ(p.variance, 2000.0);
  const auto q = posterior_fuse({50000.0, 2000.0}, {});
  EXPECT_EQ(q.mean, 50000.0);
  EXPECT_THROW(fuse({50000.0, 2000.0}, {{1.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(fuse({50000.0, -1.0}, {}), InvalidArgument);
}

TEST(Fuse, OrderInvariant) {
  Rng rng(21);
  std::normal_distribution<double> v(30000.0, 500.0);
  std::uniform_real_distribution<double> var(100.0, 5000.0);
  std::vector<OnboardMeasurement> r;
  for (int i = 0; i < 12; ++i) r.push_back({v(rng), var(rng)});
  const auto base = posterior_fuse({31000.0, 4000.0}, r);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(r.begin(), r.end(), rng);
    const auto p = posterior_fuse({31000.0, 4000.0}, r);
    ASSERT_NEAR(p.mean, base.mean, 1e-10 * base.mean);
    ASSERT_NEAR(p.variance, base.variance, 1e-10 * base.variance);
  }
}

bool passes(double k, const codesign::DesignResult& d, const PosteriorDistribution& post, int grid) {
  const auto b = codesign::uncertainty_bounds(d.c_hat_f, post.interval, d.c_hat_r, post.interval, d.speed, d.k_m, kCar,
                                              fixture::paper_road());
  const auto [a_m, b_m] = fixture::nominal(d);
  return codesign::check_ag_hurwitz(a_m, b_m, k, b.theta, b.omega, grid).ok;
}

TEST(GainUpdate, TighterPosteriorKeepsGain) {
  const auto d = fixture::fixed_design({23240.0, 1937.0}, 12.96, 10.0);
  const auto post = fuse({23240.0, 1937.0}, {{23214.0, 1413.0}});
  EXPECT_EQ(update_filter_gain(10.0, post, post, d, kCar, fixture::paper_road()), 10.0);
}

// Dry-road design meeting a much softer, wider belief: k = 10 no longer
// keeps A_g Hurwitz but k = 12 does.
TEST(GainUpdate, ReturnsNearestPassingGain) {
  const auto d = fixture::fixed_design({80000.0, 1413.0}, 22.96, 10.0);
  const double mean = 40000.0, var = 1e5;
  const PosteriorDistribution post{mean, var, {mean - 1.96 * std::sqrt(var), mean + 1.96 * std::sqrt(var)}};
  ASSERT_FALSE(passes(10.0, d, post, 5));
  ASSERT_TRUE(passes(12.0, d, post, 5));
  const double k = update_filter_gain(10.0, post, post, d, kCar, fixture::paper_road(), {0.05, 50.0, 5});
  EXPECT_GT(k, 10.0);
  EXPECT_LE(k, 12.0);
  EXPECT_TRUE(passes(k, d, post, 5));
  const long steps = std::lround((k - 10.0) / 0.05);
  for (long j = 0; j < steps; ++j) {
    EXPECT_FALSE(passes(10.0 + j * 0.05, d, post, 5)) << j;
    EXPECT_FALSE(passes(10.0 - j * 0.05, d, post, 5)) << j;
  }
}

TEST(GainUpdate, ExhaustedSearchThrows) {
  const auto d = fixture::fixed_design({80000.0, 1413.0}, 22.96, 10.0);
  const double mean = 23214.0;
  const PosteriorDistribution post{mean, 100.0, {mean - 19.6, mean + 19.6}};
  EXPECT_THROW(update_filter_gain(10.0, post, post, d, kCar, fixture::paper_road(), {0.5, 5.0, 3}), Infeasible);
  EXPECT_THROW(update_filter_gain(0.0, post, post, d, kCar, fixture::paper_road()), InvalidArgument);
}

}  // namespace

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "plk/error.hpp"
#include "plk/kernels.hpp"
#include "plk/linalg.hpp"
#include "plk/rng.hpp"

namespace {

using namespace plk;

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> y(n);
  for (auto& v : y) v = d(rng);
  return y;
}

TEST(Kernels, ScalarReferenceValues) {
  const std::vector<double> y{1.0, -2.0, 3.0, -4.0};
  EXPECT_DOUBLE_EQ(kernels::scalar::abs_trapezoid(y, 0.5), 0.5 * (0.5 * 1.0 + 2.0 + 3.0 + 0.5 * 4.0));
  EXPECT_DOUBLE_EQ(kernels::scalar::sum_squares(y), 30.0);
  EXPECT_DOUBLE_EQ(kernels::scalar::max_abs(y), 4.0);
  EXPECT_EQ(kernels::scalar::max_abs({}), 0.0);
  EXPECT_EQ(kernels::scalar::abs_trapezoid(std::vector<double>{2.0}, 1.0), 0.0);
}

TEST(Kernels, Avx2MatchesScalarOnEveryTailLength) {
  if (!kernels::avx2_available()) GTEST_SKIP() << "no AVX2 on this machine";
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 1000u, 4096u, 100003u}) {
    const auto y = random_signal(n, n + 11);
    const double ref_t = kernels::scalar::abs_trapezoid(y, 1e-3);
    const double ref_s = kernels::scalar::sum_squares(y);
    EXPECT_NEAR(kernels::avx2::abs_trapezoid(y, 1e-3), ref_t, 1e-12 * std::max(1.0, std::abs(ref_t))) << n;
    EXPECT_NEAR(kernels::avx2::sum_squares(y), ref_s, 1e-12 * std::max(1.0, ref_s)) << n;
    EXPECT_EQ(kernels::avx2::max_abs(y), kernels::scalar::max_abs(y)) << n;
  }
}

TEST(Kernels, DispatcherAgreesWithReference) {
  const auto y = random_signal(12345, 3);
  EXPECT_NEAR(kernels::abs_trapezoid(y, 0.01), kernels::scalar::abs_trapezoid(y, 0.01), 1e-10);
  EXPECT_EQ(kernels::max_abs(y), kernels::scalar::max_abs(y));
  EXPECT_FALSE(kernels::isa_name(kernels::active_isa()).empty());
}

TEST(Linalg, PseudoinverseAndRank) {
  MatrixXd a(3, 2);
  a << 1, 2, 2, 4, 3, 6;  // rank 1
  const auto p = linalg::pinv(a);
  EXPECT_EQ(p.rank, 1);
  EXPECT_LT((a * p.pinv * a - a).norm(), 1e-12);
  EXPECT_LT((p.pinv * a * p.pinv - p.pinv).norm(), 1e-12);
  EXPECT_EQ(linalg::numerical_rank(MatrixXd::Zero(2, 2)), 0);
  EXPECT_TRUE(std::isinf(linalg::condition_number(MatrixXd::Zero(2, 2))));
}

TEST(Linalg, LyapunovSolvesTransposeForm) {
  Rng rng(5);
  std::normal_distribution<double> d;
  MatrixXd a(4, 4);
  for (int i = 0; i < 16; ++i) a.data()[i] = d(rng);
  a -= (linalg::spectral_abscissa(a) + 1.0) * MatrixXd::Identity(4, 4);
  const MatrixXd q = MatrixXd::Identity(4, 4);
  const MatrixXd p = linalg::solve_lyapunov(a, q);
  EXPECT_LT((a.transpose() * p + p * a + q).norm(), 1e-10);
  EXPECT_GT(linalg::min_eigenvalue_sym(p), 0.0);
  MatrixXd singular = MatrixXd::Zero(2, 2);
  EXPECT_THROW(linalg::solve_lyapunov(singular, MatrixXd::Identity(2, 2)), IllConditioned);
}

TEST(Linalg, ExpmOfDiagonalAndRotation) {
  MatrixXd a(2, 2);
  a << 0, -1, 1, 0;
  const MatrixXd e = linalg::expm(a);
  EXPECT_NEAR(e(0, 0), std::cos(1.0), 1e-13);
  EXPECT_NEAR(e(1, 0), std::sin(1.0), 1e-13);
  EXPECT_NEAR(linalg::expm(MatrixXd::Constant(1, 1, -3.0))(0, 0), std::exp(-3.0), 1e-14);
}

TEST(Linalg, RequirePsd) {
  MatrixXd p(2, 2);
  p << 1, 0, 0, -1;
  EXPECT_THROW(linalg::require_psd(p, "p"), IllConditioned);
  p(1, 1) = 1;
  p(0, 1) = 0.5;
  EXPECT_THROW(linalg::require_psd(p, "p"), IllConditioned);
  p(1, 0) = 0.5;
  EXPECT_NO_THROW(linalg::require_psd(p, "p"));
}

TEST(Rng, StreamsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "truth"), derive_seed(1, "truth"));
  EXPECT_NE(derive_seed(1, "truth"), derive_seed(2, "truth"));
  EXPECT_NE(derive_seed(1, "truth"), derive_seed(1, "noise"));
  EXPECT_NE(derive_seed(1, "noise", 0), derive_seed(1, "noise", 1));
  Rng a = make_rng(9, "x");
  Rng b = make_rng(9, "x");
  EXPECT_EQ(a(), b());
}

}  // namespace

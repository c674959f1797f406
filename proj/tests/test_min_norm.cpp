#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hinfsearch/errors.hpp"
#include "hinfsearch/subgrad_bundle.hpp"
#include "test_util.hpp"

using namespace hinfsearch;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Exhaustive face enumeration: for every subset, the affine minimizer over
// its hull by a dense least-squares solve; keep feasible (nonnegative) ones.
double face_enumeration_norm(const std::vector<MatrixXd>& g) {
  const int m = static_cast<int>(g.size());
  const Eigen::Index d = g[0].size();
  double best = INFINITY;
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < m; ++i) if (mask & (1 << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    // minimize ||sum w_i g_i|| s.t. sum w = 1 via KKT.
    MatrixXd KKT = MatrixXd::Zero(k + 1, k + 1);
    VectorXd rhs = VectorXd::Zero(k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        KKT(a, b) = Eigen::Map<const VectorXd>(g[idx[a]].data(), d)
                        .dot(Eigen::Map<const VectorXd>(g[idx[b]].data(), d));
      }
      KKT(a, k) = KKT(k, a) = 1.0;
    }
    rhs(k) = 1.0;
    const VectorXd sol = KKT.completeOrthogonalDecomposition().solve(rhs);
    if ((KKT * sol - rhs).norm() > 1e-8) continue;
    if (sol.head(k).minCoeff() < -1e-12) continue;
    MatrixXd F = MatrixXd::Zero(g[0].rows(), g[0].cols());
    for (int a = 0; a < k; ++a) F += sol(a) * g[idx[a]];
    best = std::min(best, F.norm());
  }
  return best;
}

}  // namespace

TEST(MinNorm, SinglePointIsItself) {
  MatrixXd g(2, 2);
  g << 1, 2, 3, 4;
  const std::vector<MatrixXd> v{g};
  const auto r = min_norm_point(v);
  EXPECT_NEAR((r.F - g).norm(), 0.0, 1e-14);
  EXPECT_NEAR(r.weights(0), 1.0, 1e-14);
}

TEST(MinNorm, OriginInsideHull) {
  std::vector<MatrixXd> v(3, MatrixXd(1, 2));
  v[0] << 1, 0;
  v[1] << -1, 1;
  v[2] << -1, -1;
  EXPECT_NEAR(min_norm_point(v).F.norm(), 0.0, 1e-12);
}

TEST(MinNorm, SegmentProjection) {
  std::vector<MatrixXd> v(2, MatrixXd(1, 2));
  v[0] << 1, 1;
  v[1] << 1, -1;
  const auto r = min_norm_point(v);
  EXPECT_NEAR(r.F(0), 1.0, 1e-12);
  EXPECT_NEAR(r.F(1), 0.0, 1e-12);
  EXPECT_NEAR(r.weights(0), 0.5, 1e-12);
}

TEST(MinNorm, RejectsEmptyAndRaggedInput) {
  EXPECT_THROW(min_norm_point(std::vector<MatrixXd>{}), std::invalid_argument);
  EXPECT_THROW(min_norm_point(std::vector<MatrixXd>{MatrixXd::Ones(1, 2),
                                                    MatrixXd::Ones(2, 1)}),
               DimensionError);
}

TEST(MinNorm, MatchesFaceEnumerationWithCertificate) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> md(1, 7), dd(1, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = md(rng), d = dd(rng);
    std::vector<MatrixXd> g;
    const VectorXd shift = testutil::uniform(d, 1, -1, 1, rng) * (trial % 3);
    for (int i = 0; i < m; ++i) g.push_back(testutil::uniform(d, 1, -1, 1, rng) + shift);
    const auto r = min_norm_point(g);
    const double ff = r.F.squaredNorm();
    EXPECT_NEAR(r.F.norm(), face_enumeration_norm(g), 1e-9) << trial;
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
    EXPECT_GE(r.weights.minCoeff(), 0.0);
    MatrixXd rebuilt = MatrixXd::Zero(d, 1);
    for (int i = 0; i < m; ++i) {
      rebuilt += r.weights(i) * g[i];
      EXPECT_GE(g[i].cwiseProduct(r.F).sum(), ff - 1e-9) << trial;
    }
    EXPECT_LE((rebuilt - r.F).norm(), 1e-12);
  }
}

TEST(MinNorm, InvariantUnderPermutation) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MatrixXd> g;
    for (int i = 0; i < 5; ++i) g.push_back(testutil::uniform(2, 2, -1, 2, rng));
    const double a = min_norm_point(g).F.norm();
    std::shuffle(g.begin(), g.end(), rng);
    EXPECT_NEAR(min_norm_point(g).F.norm(), a, 1e-10);
  }
}

TEST(Sampling, BallStaysInsideAndFillsRadius) {
  Rng rng(4);
  const MatrixXd c = MatrixXd::Constant(2, 3, 0.5);
  double max_r = 0.0, sum_r = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double r = (sample_ball(c, 0.1, rng) - c).norm();
    EXPECT_LE(r, 0.1 + 1e-15);
    max_r = std::max(max_r, r);
    sum_r += r;
  }
  EXPECT_GT(max_r, 0.099);
  // Radius of a uniform point in a d-ball has mean d/(d+1) * delta.
  EXPECT_NEAR(sum_r / n, 0.1 * 6.0 / 7.0, 1e-3);
}

TEST(Sampling, CubeRangeAndMean) {
  Rng rng(5);
  MatrixXd mean = MatrixXd::Zero(3, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const MatrixXd z = sample_cube(3, 2, rng);
    EXPECT_LE(z.cwiseAbs().maxCoeff(), 0.5);
    mean += z / n;
  }
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.02);
}

TEST(Bundle, SerialAndParallelKernelsAgree) {
  const auto p = testutil::example13();
  const GradientOracle grad = make_gradient_oracle(p.plant);
  Rng rng(6);
  std::vector<MatrixXd> pts;
  for (int i = 0; i < 16; ++i) pts.push_back(sample_ball(*p.K0, 0.05, rng));
  pts.push_back(MatrixXd::Zero(1, 3));  // not stabilizing
  const auto a = kernels::evaluate_gradients_serial(grad, pts);
  const auto b = kernels::evaluate_gradients_omp(grad, pts);
  ASSERT_EQ(a.status.size(), pts.size());
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.status.back(), kernels::EvalStatus::unstable);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (a.status[i] == kernels::EvalStatus::ok) EXPECT_EQ(a.gradients[i], b.gradients[i]);
  }
}

TEST(Bundle, SeedDeterminesBundleRegardlessOfParallelism) {
  const auto p = testutil::example13();
  const GradientOracle grad = make_gradient_oracle(p.plant);
  Rng r1(11), r2(11);
  BundleOptions serial;
  serial.parallel = false;
  const Bundle a = sample_bundle(grad, *p.K0, 0.01, 4, r1, serial);
  const Bundle b = sample_bundle(grad, *p.K0, 0.01, 4, r2);
  EXPECT_EQ(a.F, b.F);
  EXPECT_EQ(a.points.size(), 4u);
  for (const auto& k : a.points) EXPECT_LE((k - *p.K0).norm(), 0.01);
}

TEST(Bundle, UnstableSampleRaises) {
  const auto p = testutil::example13();
  const GradientOracle grad = make_gradient_oracle(p.plant);
  Rng rng(1);
  // A ball of radius 100 around K0 contains destabilizing gains.
  EXPECT_THROW(sample_bundle(grad, *p.K0, 100.0, 30, rng), InfeasibleBallError);
}

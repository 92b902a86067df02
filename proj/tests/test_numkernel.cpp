#include <gtest/gtest.h>

#include <cmath>

#include "tgss/numkernel.hpp"

using tgss::DenseMatrix;
using tgss::Vec;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

} // namespace

TEST(Dot, HandArithmetic) {
  EXPECT_DOUBLE_EQ(tgss::dot(vec({1, 2, 3}), vec({4, 5, 6})), 32.0);
  EXPECT_DOUBLE_EQ(tgss::dot(vec({1, 0}), vec({0, 1})), 0.0);
}

TEST(Dot, LengthMismatchThrows) {
  EXPECT_THROW(tgss::dot(vec({1, 2}), vec({1, 2, 3})), tgss::DimensionError);
}

TEST(Dot, SymmetricBilinearCauchySchwarz) {
  tgss::Xoshiro256 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + t % 17;
    Vec x(n), y(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = rng.next_normal();
      y(i) = rng.next_normal();
      z(i) = rng.next_normal();
    }
    const double a = rng.next_normal();
    EXPECT_DOUBLE_EQ(tgss::dot(x, y), tgss::dot(y, x));
    EXPECT_NEAR(tgss::dot(a * x + z, y), a * tgss::dot(x, y) + tgss::dot(z, y), 1e-12 * (1 + std::abs(a)) * n);
    EXPECT_LE(std::abs(tgss::dot(x, y)), tgss::norm(x) * tgss::norm(y) * (1 + 1e-15));
    EXPECT_GE(tgss::dot(x, x), 0.0);
  }
}

TEST(Norm, Examples) {
  EXPECT_DOUBLE_EQ(tgss::norm(vec({3, 4})), 5.0);
  EXPECT_DOUBLE_EQ(tgss::norm(Vec::Zero(5)), 0.0);
  EXPECT_DOUBLE_EQ(tgss::norm(vec({1, 1, 1, 1})), 2.0);
}

TEST(SolveSpdDense, Examples) {
  DenseMatrix g(2, 2);
  g << 1, 0, 0, 1;
  EXPECT_TRUE(tgss::solve_spd_dense(g, vec({3, -1})).isApprox(vec({3, -1})));
  g << 2, 0, 0, 4;
  EXPECT_TRUE(tgss::solve_spd_dense(g, vec({2, 8})).isApprox(vec({1, 2})));
  g << 2, 1, 1, 2;
  const Vec t = tgss::solve_spd_dense(g, vec({3, 3}));
  EXPECT_NEAR(t(0), 1.0, 1e-14);
  EXPECT_NEAR(t(1), 1.0, 1e-14);
  EXPECT_LE((g * t - vec({3, 3})).norm(), 1e-14);
}

TEST(SolveSpdDense, ResidualBoundOnRandomSystems) {
  tgss::Xoshiro256 rng(5);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + t % 16;
    DenseMatrix b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.next_normal();
    const DenseMatrix g = b * b.transpose() + 0.5 * DenseMatrix::Identity(n, n);
    Vec rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = rng.next_normal();
    const Vec x = tgss::solve_spd_dense(g, rhs);
    const double gnorm = g.operatorNorm();
    EXPECT_LE((g * x - rhs).norm(), 1e-10 * (gnorm * x.norm() + rhs.norm()));
  }
}

TEST(SolveSpdDense, DependentDirectionsDetected) {
  DenseMatrix g(2, 2);
  g << 1, 2, 2, 4; // Gram matrix of u and 2u
  EXPECT_THROW(tgss::solve_spd_dense(g, vec({1, 2})), tgss::DependentDirectionsError);
  g << 1, 0, 0, -1;
  EXPECT_THROW(tgss::solve_spd_dense(g, vec({1, 2})), tgss::DependentDirectionsError);
}

TEST(SolveSpdDense, RejectsBadShapes) {
  EXPECT_THROW(tgss::solve_spd_dense(DenseMatrix::Identity(2, 2), vec({1, 2, 3})), tgss::DimensionError);
  EXPECT_THROW(tgss::solve_spd_dense(DenseMatrix::Identity(17, 17), Vec::Ones(17)), tgss::DimensionError);
  DenseMatrix g(2, 2);
  g << 2, 1, 0, 2;
  EXPECT_THROW(tgss::solve_spd_dense(g, vec({1, 1})), tgss::Error);
}

TEST(SolveSparseSpd, IdentityReturnsRhs) {
  tgss::SparseMatrix a(4, 4);
  a.setIdentity();
  const Vec f = vec({1, -2, 3, 0.5});
  EXPECT_TRUE(tgss::solve_sparse_spd(a, f).isApprox(f));
}

TEST(SolveSparseSpd, RandomTridiagonalResidual) {
  tgss::Xoshiro256 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const int n = 5 + t % 40;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i) {
      const double off = i + 1 < n ? rng.next_normal() : 0.0;
      trip.emplace_back(i, i, 2.5 + std::abs(rng.next_normal()) + 2 * std::abs(off));
      if (i + 1 < n) {
        trip.emplace_back(i, i + 1, off);
        trip.emplace_back(i + 1, i, off);
      }
    }
    // keep diagonal dominance with respect to the previous row's coupling too
    tgss::SparseMatrix a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    for (int i = 1; i < n; ++i) a.coeffRef(i, i) += 2 * std::abs(a.coeff(i, i - 1));
    Vec f(n);
    for (int i = 0; i < n; ++i) f(i) = rng.next_normal();
    const Vec u = tgss::solve_sparse_spd(a, f);
    EXPECT_LE((a * u - f).norm(), 1e-10 * f.norm());
  }
}

TEST(SolveSparseSpd, ConjugateGradientPathAgrees) {
  const int n = 50;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, 3.0);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, -1.0);
      trip.emplace_back(i + 1, i, -1.0);
    }
  }
  tgss::SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  const Vec f = tgss::gaussian_vector(n, 9);
  tgss::SparseSolveOptions cg;
  cg.direct_limit = 10;
  const Vec u_cg = tgss::solve_sparse_spd(a, f, cg);
  const Vec u_direct = tgss::solve_sparse_spd(a, f);
  EXPECT_LE((u_cg - u_direct).norm(), 1e-10 * u_direct.norm());
}

TEST(SolveSparseSpd, IndefiniteRejected) {
  tgss::SparseMatrix a(2, 2);
  a.insert(0, 0) = 1.0;
  a.insert(1, 1) = -1.0;
  EXPECT_THROW(tgss::solve_sparse_spd(a, vec({1, 1})), tgss::AdmissibilityError);
}

TEST(GaussianVector, Deterministic) {
  const Vec a = tgss::gaussian_vector(100, 42);
  const Vec b = tgss::gaussian_vector(100, 42);
  EXPECT_EQ(a, b);
  const Vec c = tgss::gaussian_vector(100, 43);
  EXPECT_NE(a, c);
}

TEST(GaussianVector, Moments) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec v = tgss::gaussian_vector(100000, seed);
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / (v.size() - 1);
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.05);
  }
}

TEST(GaussianVector, RejectsEmpty) { EXPECT_THROW(tgss::gaussian_vector(0, 1), tgss::DimensionError); }

namespace {

// Reference implementations written from the published algorithm text.
std::uint64_t ref_splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t ref_rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

TEST(Xoshiro256, MatchesReferenceStream) {
  std::uint64_t sm = 0;
  EXPECT_EQ(ref_splitmix(sm), 0xe220a8397b1dcdafULL);

  std::uint64_t seed = 2024;
  std::uint64_t s[4];
  for (auto& w : s) w = ref_splitmix(seed);
  tgss::Xoshiro256 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t expect = ref_rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = ref_rotl(s[3], 45);
    ASSERT_EQ(rng.next_u64(), expect);
  }
}

TEST(Xoshiro256, UniformInUnitInterval) {
  tgss::Xoshiro256 u(12345);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.next_uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

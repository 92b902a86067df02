#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tgss/geometry.hpp"

using tgss::Hyperplane;
using tgss::Stripe;
using tgss::StripeSide;
using tgss::Vec;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_vec(tgss::Xoshiro256& rng, Eigen::Index n, double scale = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.next_normal();
  return v;
}

void expect_vec_near(const Vec& a, const Vec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << "got " << a.transpose() << " want " << b.transpose();
}

} // namespace

TEST(ProjectHyperplane, Examples) {
  expect_vec_near(tgss::project_hyperplane(vec({5, 7}), {vec({1, 0}), 2}), vec({2, 7}), 0);
  expect_vec_near(tgss::project_hyperplane(vec({2, 7}), {vec({1, 0}), 2}), vec({2, 7}), 0);
  expect_vec_near(tgss::project_hyperplane(vec({1, 1}), {vec({1, 1}), 0}), vec({0, 0}), 0);
}

TEST(ProjectHyperplane, ZeroDirectionRejected) {
  EXPECT_THROW(tgss::project_hyperplane(vec({1, 1}), {vec({0, 0}), 1}), tgss::InvalidStripeError);
}

TEST(ProjectHyperplane, LandsOnPlane) {
  tgss::Xoshiro256 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 2 + t % 9;
    const Hyperplane h{random_vec(rng, n), rng.next_normal()};
    const Vec x = random_vec(rng, n, 5.0);
    const Vec p = tgss::project_hyperplane(x, h);
    EXPECT_LE(std::abs(tgss::dot(h.u, p) - h.alpha), 1e-12 * (std::abs(h.alpha) + tgss::norm(h.u) * tgss::norm(x)));
  }
}

TEST(ProjectHalfspace, Examples) {
  expect_vec_near(tgss::project_halfspace(vec({-1, 5}), vec({1, 0}), 0), vec({-1, 5}), 0);
  expect_vec_near(tgss::project_halfspace(vec({3, 5}), vec({1, 0}), 0), vec({0, 5}), 0);
  expect_vec_near(tgss::project_halfspace(vec({9, 3}), vec({0, 2}), 4), vec({9, 2}), 1e-15);
  EXPECT_THROW(tgss::project_halfspace(vec({1}), vec({0}), 0), tgss::InvalidStripeError);
}

TEST(Classify, Examples) {
  const Stripe s{vec({1, 0}), 0, 1};
  EXPECT_EQ(tgss::classify(vec({0.5, 9}), s), StripeSide::inside);
  EXPECT_EQ(tgss::classify(vec({2, 0}), s), StripeSide::above);
  EXPECT_EQ(tgss::classify(vec({-1, 0}), s), StripeSide::inside);
  EXPECT_EQ(tgss::classify(vec({-1.5, 0}), s), StripeSide::below);
}

TEST(ProjectStripe, Examples) {
  const Stripe s{vec({1, 0}), 0, 1};
  expect_vec_near(tgss::project_stripe(vec({3, 2}), s), vec({1, 2}), 0);
  expect_vec_near(tgss::project_stripe(vec({0.3, 2}), s), vec({0.3, 2}), 0);
  expect_vec_near(tgss::project_stripe(vec({-4, 0}), s), vec({-1, 0}), 0);
  EXPECT_THROW(tgss::project_stripe(vec({0, 0}), Stripe{vec({1, 0}), 0, -1}), tgss::InvalidStripeError);
}

TEST(ProjectStripe, ZeroWidthActsAsHyperplane) {
  tgss::Xoshiro256 rng(2);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + t % 5;
    const Stripe s{random_vec(rng, n), rng.next_normal(), 0.0};
    const Vec x = random_vec(rng, n, 3.0);
    expect_vec_near(tgss::project_stripe(x, s), tgss::project_hyperplane(x, {s.u, s.alpha}), 1e-13);
  }
}

// Property tests over random hyperplanes, halfspaces and stripes.
class ProjectionProperties : public ::testing::TestWithParam<int> {};

namespace {

struct Target {
  int kind; // 0 hyperplane, 1 halfspace, 2 stripe
  Stripe s;

  [[nodiscard]] Vec project(const Vec& x) const {
    if (kind == 0) return tgss::project_hyperplane(x, {s.u, s.alpha});
    if (kind == 1) return tgss::project_halfspace(x, s.u, s.alpha);
    return tgss::project_stripe(x, s);
  }
  [[nodiscard]] double violation(const Vec& x) const {
    const double v = tgss::dot(s.u, x) - s.alpha;
    if (kind == 0) return std::abs(v);
    if (kind == 1) return std::max(0.0, v);
    return std::max(0.0, std::abs(v) - s.xi);
  }
  /// A random member of the set.
  [[nodiscard]] Vec member(tgss::Xoshiro256& rng) const {
    const Vec p = tgss::project_hyperplane(random_vec(rng, s.u.size(), 3.0), {s.u, s.alpha});
    const double nn = s.u.squaredNorm();
    if (kind == 0) return p;
    if (kind == 1) return p - std::abs(rng.next_normal()) * s.u / nn;
    return p + (2.0 * rng.next_uniform() - 1.0) * s.xi * s.u / nn;
  }
};

Target random_target(tgss::Xoshiro256& rng, Eigen::Index n, int kind) {
  return {kind, Stripe{random_vec(rng, n), 2.0 * rng.next_normal(), std::abs(rng.next_normal())}};
}

} // namespace

TEST_P(ProjectionProperties, IdempotentMemberDescentNonexpansive) {
  const int kind = GetParam();
  tgss::Xoshiro256 rng(100 + kind);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 2 + t % 9;
    const Target c = random_target(rng, n, kind);
    const Vec x = random_vec(rng, n, 4.0);
    const Vec y = random_vec(rng, n, 4.0);
    const Vec px = c.project(x);
    const Vec py = c.project(y);

    EXPECT_LE((c.project(px) - px).norm(), 1e-9);
    EXPECT_LE(c.violation(px), 1e-9);

    const Vec z = c.member(rng);
    EXPECT_LE((px - z).squaredNorm(), (x - z).squaredNorm() - (px - x).squaredNorm() + 1e-9);
    EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(AllTargets, ProjectionProperties, ::testing::Values(0, 1, 2));

TEST(ProjectHyperplaneIntersection, OrthogonalPlanes) {
  const std::vector<Hyperplane> planes{{vec({1, 0, 0}), 0}, {vec({0, 1, 0}), 0}};
  const auto r = tgss::project_hyperplane_intersection(vec({3, 4, 7}), planes);
  expect_vec_near(r.point, vec({0, 0, 7}), 1e-15);
  expect_vec_near(r.coefficients, vec({3, 4}), 1e-15);
}

TEST(ProjectHyperplaneIntersection, SinglePlaneReduces) {
  tgss::Xoshiro256 rng(7);
  for (int t = 0; t < 100; ++t) {
    const Hyperplane h{random_vec(rng, 4), rng.next_normal()};
    const Vec x = random_vec(rng, 4);
    const std::vector<Hyperplane> one{h};
    expect_vec_near(tgss::project_hyperplane_intersection(x, one).point, tgss::project_hyperplane(x, h), 1e-13);
  }
}

TEST(ProjectHyperplaneIntersection, TwoLinesMeetAtOnePoint) {
  // x1 = 1 and x1 + x2 = 0 meet at (1, -1)
  const std::vector<Hyperplane> planes{{vec({1, 0}), 1}, {vec({1, 1}), 0}};
  tgss::Xoshiro256 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto r = tgss::project_hyperplane_intersection(random_vec(rng, 2, 10.0), planes);
    expect_vec_near(r.point, vec({1, -1}), 1e-12);
  }
}

TEST(ProjectHyperplaneIntersection, Errors) {
  const std::vector<Hyperplane> dependent{{vec({1, 1}), 0}, {vec({2, 2}), 1}};
  EXPECT_THROW(tgss::project_hyperplane_intersection(vec({0, 0}), dependent), tgss::DependentDirectionsError);
  EXPECT_THROW(tgss::project_hyperplane_intersection(vec({0, 0}), std::vector<Hyperplane>{}), tgss::DimensionError);
  const std::vector<Hyperplane> zero{{vec({0, 0}), 0}};
  EXPECT_THROW(tgss::project_hyperplane_intersection(vec({0, 0}), zero), tgss::InvalidStripeError);
}

TEST(Gamma, Examples) {
  EXPECT_DOUBLE_EQ(tgss::gamma(vec({1, 0}), vec({0, 5})), 1.0);
  EXPECT_DOUBLE_EQ(tgss::gamma(vec({1, 2}), vec({3, 6})), 0.0);
  EXPECT_NEAR(tgss::gamma(vec({1, 0}), vec({1, 1})), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(tgss::gamma(vec({0, 0}), vec({1, 1})), tgss::InvalidStripeError);
}

TEST(SequentialStripeProjection, SingleStripe) {
  const std::vector<Stripe> s{{vec({1, 0}), 0, 0.5}};
  const auto r = tgss::sequential_stripe_projection(vec({2, 1}), s);
  expect_vec_near(r.point, vec({0.5, 1}), 1e-15);
  expect_vec_near(r.coefficients, vec({1.5}), 1e-15);
}

TEST(SequentialStripeProjection, SecondStripeAlreadySatisfied) {
  const std::vector<Stripe> s{{vec({1, 0}), 0, 0}, {vec({0, 1}), 1, 2}};
  const auto r = tgss::sequential_stripe_projection(vec({2, 1}), s);
  expect_vec_near(r.point, vec({0, 1}), 1e-15);
  EXPECT_EQ(r.coefficients(1), 0.0);
  EXPECT_EQ(r.active, 1u);
}

TEST(SequentialStripeProjection, TwoHyperplanesMatchBruteForce) {
  const std::vector<Stripe> s{{vec({1, 0}), 0, 0}, {vec({1, 1}), 0, 0}};
  const Vec z = vec({2, 2});
  const auto r = tgss::sequential_stripe_projection(z, s);
  // The intersection of x1 = 0 and x1 + x2 = 0 is the single point (0,0);
  // a grid search over the first line confirms it is the only feasible one.
  double best = 1e300;
  Vec best_p;
  for (int i = -2000; i <= 2000; ++i) {
    const Vec p = vec({0.0, i * 1e-3});
    if (std::abs(p(0) + p(1)) > 1e-12) continue;
    if ((z - p).norm() < best) {
      best = (z - p).norm();
      best_p = p;
    }
  }
  expect_vec_near(r.point, best_p, 1e-12);
  expect_vec_near(r.point, vec({0, 0}), 1e-14);
}

TEST(SequentialStripeProjection, SingleStripeEqualsProjectStripe) {
  tgss::Xoshiro256 rng(9);
  int checked = 0;
  while (checked < 200) {
    const Eigen::Index n = 2 + checked % 6;
    const Stripe s{random_vec(rng, n), rng.next_normal(), std::abs(rng.next_normal())};
    const Vec z = random_vec(rng, n, 3.0);
    if (tgss::classify(z, s) != StripeSide::above) continue;
    const std::vector<Stripe> one{s};
    expect_vec_near(tgss::sequential_stripe_projection(z, one).point, tgss::project_stripe(z, s), 1e-13);
    ++checked;
  }
}

TEST(SequentialStripeProjection, FeasibleForManyStripes) {
  tgss::Xoshiro256 rng(10);
  int checked = 0;
  while (checked < 300) {
    const Eigen::Index n = 5 + checked % 6;
    const std::size_t count = 2 + checked % 4;
    std::vector<Stripe> stripes;
    for (std::size_t i = 0; i < count; ++i)
      stripes.push_back({random_vec(rng, n), rng.next_normal(), 0.3 * std::abs(rng.next_normal())});
    const Vec z = random_vec(rng, n, 3.0);
    if (tgss::classify(z, stripes[0]) != StripeSide::above) continue;
    const auto r = tgss::sequential_stripe_projection(z, stripes);
    EXPECT_EQ(r.dropped, 0u);
    for (const auto& s : stripes) EXPECT_LE(tgss::stripe_violation(r.point, s), 1e-9);
    Vec rebuilt = z;
    for (std::size_t i = 0; i < count; ++i) rebuilt -= r.coefficients(static_cast<Eigen::Index>(i)) * stripes[i].u;
    expect_vec_near(rebuilt, r.point, 1e-10);
    ++checked;
  }
}

TEST(SequentialStripeProjection, ParallelOlderStripeDropped) {
  const std::vector<Stripe> s{{vec({1, 1}), 0, 0}, {vec({2, 2}), 1, 0}};
  const auto r = tgss::sequential_stripe_projection(vec({3, 1}), s);
  EXPECT_EQ(r.dropped, 1u);
  EXPECT_EQ(r.active, 1u);
  expect_vec_near(r.point, tgss::project_hyperplane(vec({3, 1}), {vec({1, 1}), 0}), 1e-15);
}

TEST(SequentialStripeProjection, Preconditions) {
  const std::vector<Stripe> s{{vec({1, 0}), 0, 1}};
  EXPECT_THROW(tgss::sequential_stripe_projection(vec({0.5, 0}), s), tgss::PreconditionError);
  EXPECT_THROW(tgss::sequential_stripe_projection(vec({0.5, 0}), std::vector<Stripe>{}), tgss::DimensionError);
}

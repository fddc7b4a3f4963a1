#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "d2dsim/random.hpp"
#include "d2dsim/torus.hpp"

using namespace d2d;

namespace {

double brute_distance(TorusPoint p, TorusPoint q, double L) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      best = std::min(best, std::hypot((q.x - p.x) + 2 * L * i, (q.y - p.y) + 2 * L * j));
    }
  }
  return best;
}

TorusPoint random_point(RandomStream& rng, double L) {
  return wrap({rng.uniform(-L, L), rng.uniform(-L, L)}, L);
}

}  // namespace

TEST(Wrap, Examples) {
  EXPECT_EQ(wrap({0, 0}, 500), (TorusPoint{0, 0}));
  EXPECT_EQ(wrap({700, -1200}, 500), (TorusPoint{-300, -200}));
  EXPECT_EQ(wrap({1000, 1000}, 500), (TorusPoint{0, 0}));
}

TEST(Wrap, UpperEdgeMapsToLowerEdge) {
  EXPECT_EQ(wrap({500, 500}, 500), (TorusPoint{-500, -500}));
  EXPECT_EQ(wrap({-500, 0}, 500), (TorusPoint{-500, 0}));
}

TEST(Wrap, RejectsBadInput) {
  EXPECT_THROW(wrap({std::nan(""), 0}, 500), std::invalid_argument);
  EXPECT_THROW(wrap({std::numeric_limits<double>::infinity(), 0}, 500), std::invalid_argument);
  EXPECT_THROW(wrap({0, 0}, 0), std::invalid_argument);
}

TEST(Wrap, IdempotentAndCanonical) {
  RandomStream rng(11);
  const double L = 750;
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint w = wrap({rng.uniform(-10 * L, 10 * L), rng.uniform(-10 * L, 10 * L)}, L);
    ASSERT_GE(w.x, -L);
    ASSERT_LT(w.x, L);
    ASSERT_GE(w.y, -L);
    ASSERT_LT(w.y, L);
    ASSERT_EQ(wrap(w.vec(), L), w);
  }
}

TEST(Wrap, PeriodicOnDyadicPoints) {
  // points on a 1/1024 grid keep all sums exact
  RandomStream rng(12);
  const double L = 512;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 p{static_cast<double>(rng.below(1 << 22)) / 1024.0 - 2048.0,
                 static_cast<double>(rng.below(1 << 22)) / 1024.0 - 2048.0};
    const int k = static_cast<int>(rng.below(7)) - 3;
    const int j = static_cast<int>(rng.below(7)) - 3;
    ASSERT_EQ(wrap(p + Vec2{2 * L * k, 2 * L * j}, L), wrap(p, L));
  }
}

TEST(TorusDistance, Examples) {
  EXPECT_DOUBLE_EQ(torus_distance({-499, 0}, {499, 0}, 500), 2.0);
  EXPECT_EQ(torus_distance({3, 4}, {3, 4}, 500), 0.0);
  EXPECT_DOUBLE_EQ(torus_distance({0, 0}, {300, 400}, 500), brute_distance({0, 0}, {300, 400}, 500));
  EXPECT_DOUBLE_EQ(torus_distance({0, 0}, {300, 400}, 500), 500.0);
}

TEST(TorusDistance, MatchesNineImagesExactly) {
  RandomStream rng(13);
  const double L = 1000;
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint p = random_point(rng, L), q = random_point(rng, L);
    ASSERT_EQ(torus_distance(p, q, L), brute_distance(p, q, L));
    ASSERT_EQ(torus_distance(p, q, L), torus_distance(q, p, L));
    ASSERT_LE(torus_distance(p, q, L), std::sqrt(2.0) * L);
  }
}

TEST(TorusDistance, TriangleInequality) {
  RandomStream rng(14);
  const double L = 1000;
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint a = random_point(rng, L), b = random_point(rng, L), c = random_point(rng, L);
    const double lhs = torus_distance(a, c, L);
    const double rhs = torus_distance(a, b, L) + torus_distance(b, c, L);
    ASSERT_LE(lhs, rhs * (1 + 1e-9));
  }
}

TEST(BoundaryCrossing, HorizontalWrap) {
  const auto bc = boundary_crossing_points({-499, 0}, {499, 0}, 500);
  ASSERT_TRUE(bc);
  EXPECT_DOUBLE_EQ(bc->exit.x, -500);
  EXPECT_DOUBLE_EQ(bc->exit.y, 0);
  EXPECT_DOUBLE_EQ(bc->reentry.x, 500);
  EXPECT_DOUBLE_EQ(bc->reentry.y, 0);
}

TEST(BoundaryCrossing, InteriorSegment) {
  EXPECT_FALSE(boundary_crossing_points({0, 0}, {100, 100}, 500));
}

TEST(BoundaryCrossing, SimilarTriangles) {
  // minimal image of q is (470 - 1000, 10); intersect with x = -500
  const Vec2 p{-480, -10}, q{-530, 10};
  const double t = (-500 - p.x) / (q.x - p.x);
  const double y = p.y + t * (q.y - p.y);
  const auto bc = boundary_crossing_points({-480, -10}, {470, 10}, 500);
  ASSERT_TRUE(bc);
  EXPECT_NEAR(bc->exit.x, -500, 1e-9);
  EXPECT_NEAR(bc->exit.y, y, 1e-9);
  EXPECT_NEAR(bc->exit.y, -2, 1e-9);
  EXPECT_NEAR(bc->reentry.x, 500, 1e-9);
  EXPECT_NEAR(bc->reentry.y, y, 1e-9);
}

TEST(Random, NamedStreamsAreIndependentOfOrder) {
  RandomStream a(42, "placement"), b(42, "placement"), c(42, "velocities");
  EXPECT_EQ(a.bits(), b.bits());
  EXPECT_NE(RandomStream(42, "placement").bits(), c.bits());
  EXPECT_EQ(derive_seed(42, "geometry"), splitmix64(42 ^ fnv1a64("geometry")));
}

TEST(Random, UniformAndBelowRanges) {
  RandomStream rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(17), 17u);
  }
}

TEST(Random, PoissonMoments) {
  RandomStream rng(8);
  for (double mean : {0.3, 3.0, 40.0}) {
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 3 * std::sqrt(mean / n)) << mean;
    EXPECT_NEAR(s2 / n - m * m, mean, 0.1 * mean) << mean;
  }
}

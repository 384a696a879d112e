// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imrc/core.hpp"

namespace imrc {
namespace {

TEST(LinearIndex, KnownOffsets) {
  const GridIndex res{4, 4, 4};
  EXPECT_EQ(linear_index({0, 0, 0}, res), 0u);
  EXPECT_EQ(linear_index({1, 0, 0}, res), 1u);
  EXPECT_EQ(linear_index({0, 1, 0}, res), 4u);
  EXPECT_EQ(linear_index({0, 0, 1}, res), 16u);
  EXPECT_EQ(linear_index({0, 1, 2}, res), 36u);
  EXPECT_EQ(linear_index({3, 3, 3}, res), 63u);
}

TEST(LinearIndex, OutOfRangeThrows) {
  const GridIndex res{4, 4, 4};
  EXPECT_THROW(linear_index({4, 0, 0}, res), BoundsError);
  EXPECT_THROW(linear_index({0, -1, 0}, res), BoundsError);
  EXPECT_THROW(linear_index({0, 0, 4}, res), BoundsError);
}

TEST(LinearIndex, DelinearizeIsInverse) {
  const GridIndex res{3, 4, 5};
  for (std::size_t i = 0; i < 3u * 4u * 5u; ++i) {
    const GridIndex idx = delinearize(i, res);
    EXPECT_EQ(linear_index(idx, res), i);
  }
}

TEST(LinearIndex, XFastestOrder) {
  // Incrementing x moves one slot; y moves a row; z moves a slab.
  const GridIndex res{7, 5, 3};
  const std::size_t base = linear_index({2, 3, 1}, res);
  EXPECT_EQ(linear_index({3, 3, 1}, res), base + 1);
  EXPECT_EQ(linear_index({2, 4, 1}, res), base + 7);
  EXPECT_EQ(linear_index({2, 3, 2}, res), base + 35);
}

TEST(Normalize, UnitAxis) {
  const Vec3 n = normalize({2.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(n.x, 1.0);
  EXPECT_DOUBLE_EQ(n.y, 0.0);
  EXPECT_DOUBLE_EQ(n.z, 0.0);
}

TEST(Normalize, Diagonal) {
  const Vec3 n = normalize({1.0, 1.0, 1.0});
  const double e = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(n.x, e, 1e-15);
  EXPECT_NEAR(n.y, e, 1e-15);
  EXPECT_NEAR(n.z, e, 1e-15);
}

TEST(Normalize, ZeroVectorThrows) {
  EXPECT_THROW(normalize({0.0, 0.0, 0.0}), DegenerateDirectionError);
}

TEST(Normalize, NonFiniteThrows) {
  EXPECT_THROW(normalize({std::numeric_limits<double>::infinity(), 0.0, 0.0}),
               DegenerateDirectionError);
  EXPECT_THROW(normalize({std::nan(""), 1.0, 0.0}), DegenerateDirectionError);
}

TEST(Normalize, IdempotentWithinTolerance) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v{uniform_double(rng) * 10.0 - 5.0, uniform_double(rng) * 10.0 - 5.0,
                 uniform_double(rng) * 10.0 - 5.0};
    if (norm(v) < 1e-6) continue;
    const Vec3 n1 = normalize(v);
    const Vec3 n2 = normalize(n1);
    EXPECT_NEAR(n1.x, n2.x, 1e-15);
    EXPECT_NEAR(n1.y, n2.y, 1e-15);
    EXPECT_NEAR(n1.z, n2.z, 1e-15);
    EXPECT_NEAR(norm(n1), 1.0, 1e-12);
  }
}

TEST(VectorOps, CrossAndDot) {
  const Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
  const Vec3 c = cross(x, y);
  EXPECT_DOUBLE_EQ(c.x, z.x);
  EXPECT_DOUBLE_EQ(c.y, z.y);
  EXPECT_DOUBLE_EQ(c.z, z.z);
  EXPECT_DOUBLE_EQ(dot(x, y), 0.0);
  EXPECT_DOUBLE_EQ(dot({1, 2, 3}, {4, 5, 6}), 32.0);
}

TEST(ColorOps, MeanSquare) {
  EXPECT_DOUBLE_EQ(mean_square({1.0, 1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(mean_square({1.0, 0.0, 0.0}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mean_square({0.0, 0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(mean_square({-0.5, 0.5, 0.0}), (0.25 + 0.25) / 3.0);
}

TEST(ColorOps, Arithmetic) {
  Color a{0.5, 0.25, 0.75};
  const Color b{0.1, 0.2, 0.3};
  const Color sum = a + b;
  EXPECT_DOUBLE_EQ(sum.r, 0.6);
  EXPECT_DOUBLE_EQ(sum.g, 0.45);
  EXPECT_DOUBLE_EQ(sum.b, 1.05);
  a -= b;
  EXPECT_DOUBLE_EQ(a.r, 0.4);
  const Color scaled = 2.0 * b;
  EXPECT_DOUBLE_EQ(scaled.g, 0.4);
}

TEST(EvalConfig, DefaultsValidate) {
  EvalConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.sh_degree, 2);
  EXPECT_DOUBLE_EQ(cfg.ray_step, 0.0);  // auto
}

TEST(EvalConfig, RejectsBadDegree) {
  EvalConfig cfg;
  cfg.sh_degree = 5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.sh_degree = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EvalConfig, RejectsBadThresholds) {
  EvalConfig cfg;
  cfg.skip_alpha_eps = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = EvalConfig{};
  cfg.min_confidence = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Random, UniformDoubleInHalfOpenUnitInterval) {
  std::mt19937_64 rng(123);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform_double(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  // With 1e5 draws the extremes should approach the interval ends.
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1.0 - 1e-3);
}

TEST(Random, UniformDoubleIsSeedDeterministic) {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(uniform_double(a), uniform_double(b));
  }
}

TEST(Random, UnitDirectionsAreUnitAndCoverOctants) {
  std::mt19937_64 rng(99);
  int octants[8] = {0};
  for (int i = 0; i < 10000; ++i) {
    const Vec3 d = uniform_unit_dir(rng);
    ASSERT_NEAR(norm(d), 1.0, 1e-12);
    octants[(d.x > 0) + 2 * (d.y > 0) + 4 * (d.z > 0)]++;
  }
  for (int c : octants) EXPECT_GT(c, 1000);  // ~1250 expected per octant
}

}  // namespace
}  // namespace imrc
